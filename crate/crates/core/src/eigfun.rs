//! Eigenfunction recovery at a converged eigenvalue. The recorded subspaces
//! of both sides fix the solution up to the matching vector; values between
//! meshpoints come from partial CP steps.

use crate::cp::Interval;
use crate::error::{Error, Result};
use crate::linalg::{solve, sym_eig, Mat, SymMatrix, Vector};
use crate::problems::ProblemDef;
use crate::shooting::{mismatch_from, Discretization};

/// `(x, y(x), y'(x))`
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: Vector,
    pub yp: Vector,
}

#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub energy: f64,
    /// position within a degenerate eigenspace, 0-based
    pub branch: usize,
    pub samples: Vec<Sample>,
    /// `∫ yᵀy` before scaling, for the branch with unit matching vector
    /// `y'(c)`, from the matching data
    pub norm_certificate: f64,
    /// `∫ yᵀy` of the scaled function by composite Simpson quadrature
    pub quadrature_norm: f64,
    /// relative jump of `(y, y')` at the matching point
    pub match_defect: f64,
}

/// Null vectors `v` of `M = Ψ_L(c) − Ψ_R(c)` with the coefficient vectors
/// `w_L = D_L⁻¹v`, `w_R = D_R⁻¹v` of the two recorded bases. The
/// `multiplicity` eigenvectors of smallest |λ| are used.
pub fn matching_vectors(m: &SymMatrix, d_l: &Mat, d_r: &Mat, multiplicity: usize) -> Result<Vec<(Vector, Vector, Vector)>> {
    if multiplicity == 0 {
        return Err(Error::NotAnEigenvalue(f64::NAN));
    }
    if multiplicity > m.n() {
        return Err(Error::Dimension(format!("multiplicity {multiplicity} exceeds {} channels", m.n())));
    }
    let eig = sym_eig(m)?;
    let mut order: Vec<usize> = (0..m.n()).collect();
    order.sort_by(|&i, &j| eig.values[i].abs().total_cmp(&eig.values[j].abs()).then(i.cmp(&j)));
    order
        .into_iter()
        .take(multiplicity)
        .map(|i| {
            let v: Vector = eig.vectors.column(i).into_owned();
            let vm = Mat::from_column_slice(v.len(), 1, v.as_slice());
            let wl = solve(d_l, &vm)?.column(0).into_owned();
            let wr = solve(d_r, &vm)?.column(0).into_owned();
            Ok((v, wl, wr))
        })
        .collect()
}

/// Two-term form `w_Lᵀ D_Lᵀ Ψ_L^E D_L w_L − w_Rᵀ D_Rᵀ Ψ_R^E D_R w_R`.
pub fn norm_squared_two_term(psi_le: &SymMatrix, psi_re: &SymMatrix, d_l: &Mat, d_r: &Mat, wl: &Vector, wr: &Vector) -> f64 {
    let yl = d_l * wl;
    let yr = d_r * wr;
    yl.dot(&(psi_le.as_matrix() * &yl)) - yr.dot(&(psi_re.as_matrix() * &yr))
}

fn split(z: &Vector, n: usize) -> (Vector, Vector) {
    (z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
}

fn project(basis: &Mat, z: &Vector) -> Vector {
    basis * (basis.transpose() * z)
}

/// `[y; y']` carried across `iv` (or its first `delta`) at energy `e`.
fn forward(iv: &Interval, e: f64, delta: Option<f64>, z: &Vector) -> Result<Vector> {
    let st = match delta {
        Some(d) => iv.partial_step(e, d)?,
        None => iv.step(e)?,
    };
    Ok(st.transfer() * z)
}

/// Inverse step: `T⁻¹ = [[W', −W], [−U', U]]`, exact because the blocks
/// are symmetric and commute.
fn backward(iv: &Interval, e: f64, z: &Vector) -> Result<Vector> {
    let st = iv.step(e)?;
    let n = st.n();
    let (y, yp) = split(z, n);
    let y0 = &st.wp * &y - &st.w * &yp;
    let yp0 = -&st.up * &y + &st.u * &yp;
    let mut out = Vector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&y0);
    out.rows_mut(n, n).copy_from(&yp0);
    Ok(out)
}

/// Composite Simpson with `panels` (even) panels per interval, starting
/// from the meshpoint states.
fn simpson_norm(disc: &Discretization, e: f64, states: &[Vector], panels: usize) -> Result<f64> {
    let n = disc.problem.n;
    let mut total = 0.0;
    for (iv, z) in disc.cache.intervals.iter().zip(states) {
        let h = iv.h();
        let step = h / panels as f64;
        let mut acc = 0.0;
        for j in 0..=panels {
            let zj = if j == 0 { z.clone() } else { forward(iv, e, Some(j as f64 * step), z)? };
            let (y, _) = split(&zj, n);
            let w = if j == 0 || j == panels {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * y.norm_squared();
        }
        total += acc * step / 3.0;
    }
    Ok(total)
}

/// Normalized eigenfunctions for an eigenvalue `e` of `disc` with the given
/// multiplicity. Samples lie at every meshpoint and at `dense` equally
/// spaced points inside each interval. Degenerate branches are made
/// orthonormal.
pub fn eigenfunctions(disc: &Discretization, e: f64, multiplicity: usize, dense: usize) -> Result<Vec<Eigenfunction>> {
    let n = disc.problem.n;
    let c = disc.select_matching_point(e)?;
    let shot = disc.shoot(e, c, false, true)?;
    let mm = mismatch_from(&shot)?;
    let (_, d_l) = shot.left.pair();
    let (_, d_r) = shot.right.pair();
    let pairs = matching_vectors(&mm.matrix, &d_l, &d_r, multiplicity)?;

    // Gram matrix of the branches: ∫ y_iᵀ y_j = v_iᵀ (Ψ_L^E − Ψ_R^E) v_j
    let m = pairs.len();
    let mut gram = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = pairs[i].0.dot(&(mm.psi_e.as_matrix() * &pairs[j].0));
        }
    }
    for i in 0..m {
        if gram[(i, i)] <= 0.0 || !gram[(i, i)].is_finite() {
            return Err(Error::Normalization(gram[(i, i)]));
        }
    }
    let chol = gram.clone().cholesky().ok_or(Error::Normalization(gram.min()))?;
    // columns of L⁻ᵀ give orthonormal combinations of the branches
    let mix = chol.l().transpose().try_inverse().ok_or(Error::Normalization(0.0))?;

    let intervals = &disc.cache.intervals;
    let mut out = Vec::with_capacity(m);
    for b in 0..m {
        let combine = |sel: fn(&(Vector, Vector, Vector)) -> &Vector| {
            let mut acc = Vector::zeros(n);
            for (i, p) in pairs.iter().enumerate() {
                acc += sel(p) * mix[(i, b)];
            }
            acc
        };
        let wl = combine(|p| &p.1);
        let wr = combine(|p| &p.2);
        let v = combine(|p| &p.0);
        let norm_certificate = gram[(b, b)];
        let mixed_norm = v.dot(&(mm.psi_e.as_matrix() * &v));

        // state [y; y'] at every meshpoint
        let n_pts = intervals.len() + 1;
        let mut states = vec![Vector::zeros(2 * n); n_pts];
        let z_cl = &shot.left_bases[c] * &wl;
        let z_cr = &shot.right_bases[0] * &wr;
        states[c] = z_cl.clone();
        for i in (0..c).rev() {
            let z = backward(&intervals[i], e, &states[i + 1])?;
            states[i] = project(&shot.left_bases[i], &z);
        }
        let mut z = z_cr.clone();
        for i in c..intervals.len() {
            z = project(&shot.right_bases[i + 1 - c], &forward(&intervals[i], e, None, &z)?);
            states[i + 1] = z.clone();
        }
        let scale_max = states.iter().map(|s| s.amax()).fold(0.0, f64::max);
        let match_defect = (&z_cl - &z_cr).amax() / scale_max;

        let inv = 1.0 / mixed_norm.sqrt();
        for s in states.iter_mut() {
            *s *= inv;
        }
        let mut samples = Vec::with_capacity(n_pts + dense * intervals.len());
        for (i, iv) in intervals.iter().enumerate() {
            let (y, yp) = split(&states[i], n);
            samples.push(Sample { x: iv.x_lo, y, yp });
            for j in 1..=dense {
                let delta = iv.h() * j as f64 / (dense + 1) as f64;
                let (y, yp) = split(&forward(iv, e, Some(delta), &states[i])?, n);
                samples.push(Sample { x: iv.x_lo + delta, y, yp });
            }
        }
        let (y, yp) = split(&states[n_pts - 1], n);
        samples.push(Sample { x: disc.problem.b, y, yp });

        let mut ef = Eigenfunction {
            energy: e,
            branch: b,
            samples,
            norm_certificate,
            quadrature_norm: 0.0,
            match_defect,
        };
        apply_sign_convention(&mut ef);
        ef.quadrature_norm = simpson_norm(disc, e, &states[..n_pts - 1], 4)?;
        out.push(ef);
    }
    Ok(out)
}

/// Makes the first clearly nonzero component of `y`, scanning samples from
/// the left, positive. Returns whether the sign was flipped.
pub fn apply_sign_convention(ef: &mut Eigenfunction) -> bool {
    let peak = ef.samples.iter().map(|s| s.y.amax()).fold(0.0, f64::max);
    let cutoff = 1e-8 * peak;
    let first = ef.samples.iter().flat_map(|s| s.y.iter()).find(|v| v.abs() > cutoff).copied();
    match first {
        Some(v) if v < 0.0 => {
            for s in ef.samples.iter_mut() {
                s.y *= -1.0;
                s.yp *= -1.0;
            }
            true
        }
        _ => false,
    }
}

/// `(‖A₁y(a) + A₂y'(a)‖, ‖B₁y(b) + B₂y'(b)‖)`
pub fn boundary_residuals(problem: &ProblemDef, ef: &Eigenfunction) -> (f64, f64) {
    let first = &ef.samples[0];
    let last = &ef.samples[ef.samples.len() - 1];
    let ra = &problem.a1 * &first.y + &problem.a2 * &first.yp;
    let rb = &problem.b1 * &last.y + &problem.b2 * &last.yp;
    (ra.norm(), rb.norm())
}

/// Trapezoid `∫ f(x)·g(x)` over the samples, for orthogonality checks.
pub fn sample_inner_product(f: &Eigenfunction, g: &Eigenfunction) -> f64 {
    f.samples
        .windows(2)
        .zip(g.samples.windows(2))
        .map(|(a, b)| 0.5 * (a[1].x - a[0].x) * (a[0].y.dot(&b[0].y) + a[1].y.dot(&b[1].y)))
        .sum()
}
