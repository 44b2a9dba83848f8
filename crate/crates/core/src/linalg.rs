//! Dense linear algebra for the small (n ≲ 32) matrices that appear in the
//! propagators: symmetric eigendecomposition, pivoted LU solves, null spaces
//! and the spectrum of a matrix pair `A·B⁻¹`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Dense real symmetric matrix. The stored entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    /// Symmetrizes `(m + mᵀ)/2`.
    pub fn from_matrix(m: Mat) -> Self {
        assert!(m.is_square(), "SymMatrix needs a square matrix");
        let n = m.nrows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        SymMatrix(s)
    }

    /// Builds from the upper triangle given row by row
    /// (`a11 a12 .. a1n a22 .. ann`).
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension(format!(
                "expected {} upper-triangle entries for n = {n}, got {}",
                n * (n + 1) / 2,
                upper.len()
            )));
        }
        let mut m = Mat::zeros(n, n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in i..n {
                let v = *it.next().unwrap();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Mat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Mat::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(Mat::from_diagonal(&Vector::from_column_slice(d)))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_matrix(self) -> Mat {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        SymMatrix(&self.0 + &other.0)
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &SymMatrix) -> Self {
        SymMatrix(&self.0 + &other.0 * s)
    }
}

impl Deref for SymMatrix {
    type Target = Mat;

    fn deref(&self) -> &Mat {
        &self.0
    }
}

/// `A = D·diag(values)·Dᵀ` with ascending values.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp {
    pub values: Vector,
    pub vectors: Mat,
}

impl EigDecomp {
    pub fn reconstruct(&self) -> Mat {
        &self.vectors * Mat::from_diagonal(&self.values) * self.vectors.transpose()
    }
}

pub fn norm_inf(a: &Mat) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_1(a: &Mat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Cyclic Jacobi eigensolver. Converged when the off-diagonal Frobenius norm
/// falls to 1e-14 of the full Frobenius norm.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    let n = a.n();
    let mut m = a.as_matrix().clone();
    let mut v = Mat::identity(n, n);
    let total = m.norm();
    let target = 1e-14 * total;

    let off = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(EigDecomp { values, vectors })
}

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, big) = (col..n)
                .map(|r| (r, lu[(r, col)].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if big == 0.0 || !big.is_finite() {
                return Err(Error::Singular { pivot: col });
            }
            if piv != col {
                lu.swap_rows(piv, col);
                perm.swap(piv, col);
            }
            let d = lu[(col, col)];
            for r in (col + 1)..n {
                let f = lu[(r, col)] / d;
                lu[(r, col)] = f;
                if f != 0.0 {
                    for c in (col + 1)..n {
                        lu[(r, c)] -= f * lu[(col, c)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &Mat) -> Mat {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n, "right-hand side has wrong row count");
        let mut x = Mat::zeros(n, b.ncols());
        for (dst, &src) in self.perm.iter().enumerate() {
            x.set_row(dst, &b.row(src));
        }
        for c in 0..x.ncols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in (i + 1)..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> Mat {
        let n = self.lu.nrows();
        self.solve(&Mat::identity(n, n))
    }

    pub fn determinant(&self) -> f64 {
        let n = self.lu.nrows();
        let mut det: f64 = (0..n).map(|i| self.lu[(i, i)]).product();
        // parity of the permutation
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

/// `X` with `A·X = B`.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    Ok(Lu::new(a)?.solve(b))
}

/// `A·B⁻¹`, computed as `(B⁻ᵀ Aᵀ)ᵀ`.
pub fn right_divide(a: &Mat, b: &Mat) -> Result<Mat> {
    Ok(solve(&b.transpose(), &a.transpose())?.transpose())
}

pub fn determinant(a: &Mat) -> f64 {
    match Lu::new(a) {
        Ok(lu) => lu.determinant(),
        Err(_) => 0.0,
    }
}

/// 1-norm condition number; infinite for singular input.
pub fn cond1(a: &Mat) -> f64 {
    match Lu::new(a) {
        Ok(lu) => {
            let c = norm_1(a) * norm_1(&lu.inverse());
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Default relative tolerance for rank and multiplicity decisions.
pub const NULL_SPACE_TOL: f64 = 1e-8;

/// Orthonormal eigenvectors of `a` whose eigenvalues satisfy
/// `|λ| ≤ tol·max(1, ‖a‖∞)`.
pub fn null_space(a: &SymMatrix, tol: f64) -> Result<Vec<Vector>> {
    let eig = sym_eig(a)?;
    let cutoff = tol * f64::max(1.0, norm_inf(a));
    Ok((0..a.n())
        .filter(|&i| eig.values[i].abs() <= cutoff)
        .map(|i| eig.vectors.column(i).into_owned())
        .collect())
}

/// Real eigenvalues of `A·B⁻¹`, ascending. Fails when an eigenvalue has
/// `|Im| > tol_imag·(1 + |Re|)`.
pub fn pair_eigenvalues(a: &Mat, b: &Mat, tol_imag: f64) -> Result<Vec<f64>> {
    let c = right_divide(a, b)?;
    real_eigenvalues(&c, tol_imag)
}

/// Real spectrum of a general square matrix (Hessenberg + shifted QR).
pub fn real_eigenvalues(c: &Mat, tol_imag: f64) -> Result<Vec<f64>> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::SpectralReality { re: f64::NAN, im: f64::NAN });
    }
    let n = c.nrows();
    let mut out = Vec::with_capacity(n);
    if n == 1 {
        out.push(c[(0, 0)]);
        return Ok(out);
    }
    let ev = c.complex_eigenvalues();
    for z in ev.iter() {
        if z.im.abs() > tol_imag * (1.0 + z.re.abs()) {
            return Err(Error::SpectralReality { re: z.re, im: z.im });
        }
        out.push(z.re);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Thin QR of a tall matrix: returns `(Q, R)` with orthonormal columns in `Q`
/// and upper-triangular `R`.
pub fn thin_qr(x: &Mat) -> (Mat, Mat) {
    let qr = x.clone().qr();
    (qr.q(), qr.r())
}
