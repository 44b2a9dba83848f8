//! Constant-reference-potential (CP) propagators.
//!
//! On each mesh interval the potential is replaced by its average `V₀`,
//! which is diagonalized once (`V₀ = D·diag(v)·Dᵀ`). For a trial energy the
//! transfer matrix
//!
//! ```text
//! [Y(x+h) ]   [U  W ] [Y(x) ]
//! [Y'(x+h)] = [U' W'] [Y'(x)]
//! ```
//!
//! is then diagonal in the `D` basis with `U = ξ(Z)`, `W = h η₀(Z)`,
//! `U' = (Z/h) η₀(Z)`, `W' = ξ(Z)`, `Z = (v - E) h²`. All four blocks and
//! their energy derivatives are symmetric.

use crate::error::Result;
use crate::linalg::{sym_eig, EigDecomp, Mat, SymMatrix};
use crate::mesh::Mesh;
use crate::problems::ProblemDef;
use crate::specfun::{eval_kernels, KernelValues};

/// 3-point Gauss–Legendre nodes on [-1, 1].
const GL_NODE: f64 = 0.774_596_669_241_483_4; // √(3/5)
const GL_W_OUTER: f64 = 5.0 / 18.0; // weights normalized to sum to 1
const GL_W_INNER: f64 = 8.0 / 18.0;

/// Interval average of the potential and its first Legendre coefficient
/// (the linear trend across the interval), both by 3-point Gauss–Legendre.
pub fn legendre_moments(problem: &ProblemDef, x_lo: f64, x_hi: f64) -> Result<(SymMatrix, SymMatrix)> {
    let mid = 0.5 * (x_lo + x_hi);
    let half = 0.5 * (x_hi - x_lo);
    let vm = problem.eval(mid - GL_NODE * half)?;
    let v0 = problem.eval(mid)?;
    let vp = problem.eval(mid + GL_NODE * half)?;
    let avg = vm.add(&vp).scale(GL_W_OUTER).axpy(GL_W_INNER, &v0);
    // (3/2)∫ V(t) t dt over [-1, 1]
    let slope = vp.axpy(-1.0, &vm).scale(1.5 * (5.0 / 9.0) * GL_NODE);
    Ok((avg, slope))
}

pub fn average_potential(problem: &ProblemDef, x_lo: f64, x_hi: f64) -> Result<SymMatrix> {
    Ok(legendre_moments(problem, x_lo, x_hi)?.0)
}

/// Energy-independent data of one mesh interval.
#[derive(Debug, Clone)]
pub struct Interval {
    pub x_lo: f64,
    pub x_hi: f64,
    pub v0: SymMatrix,
    pub decomp: EigDecomp,
}

impl Interval {
    pub fn new(x_lo: f64, x_hi: f64, v0: SymMatrix) -> Result<Self> {
        let decomp = sym_eig(&v0)?;
        Ok(Interval { x_lo, x_hi, v0, decomp })
    }

    pub fn from_problem(problem: &ProblemDef, x_lo: f64, x_hi: f64) -> Result<Self> {
        Self::new(x_lo, x_hi, average_potential(problem, x_lo, x_hi)?)
    }

    pub fn h(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    /// Smallest eigenvalue of the interval average.
    pub fn min_level(&self) -> f64 {
        self.decomp.values[0]
    }

    /// Sub-interval `[x_lo + t0·h, x_lo + t1·h]` sharing the same constant
    /// potential.
    pub fn sub(&self, t0: f64, t1: f64) -> Interval {
        let h = self.h();
        Interval {
            x_lo: self.x_lo + t0 * h,
            x_hi: if t1 == 1.0 { self.x_hi } else { self.x_lo + t1 * h },
            v0: self.v0.clone(),
            decomp: self.decomp.clone(),
        }
    }

    pub fn step(&self, e: f64) -> Result<CpStep<'_>> {
        CpStep::build(&self.decomp, e, self.h())
    }

    /// Step of length `delta` from the left end (for dense sampling).
    pub fn partial_step(&self, e: f64, delta: f64) -> Result<CpStep<'_>> {
        CpStep::build(&self.decomp, e, delta)
    }
}

/// Transfer-matrix blocks of one interval at one energy.
#[derive(Debug, Clone)]
pub struct CpStep<'a> {
    pub h: f64,
    pub e: f64,
    pub decomp: &'a EigDecomp,
    /// kernels per decoupled channel, `Z_k = (v_k - E) h²`
    pub kernels: Vec<KernelValues>,
    pub u: Mat,
    pub w: Mat,
    pub up: Mat,
    pub wp: Mat,
    pub du: Mat,
    pub dw: Mat,
    pub dup: Mat,
    pub dwp: Mat,
}

/// `D·diag(d)·Dᵀ`
fn rotate_diag(dvec: &Mat, d: &[f64]) -> Mat {
    let n = d.len();
    let mut scaled = dvec.clone();
    for (j, &s) in d.iter().enumerate() {
        scaled.column_mut(j).scale_mut(s);
    }
    let mut out = scaled * dvec.transpose();
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

impl<'a> CpStep<'a> {
    pub fn build(decomp: &'a EigDecomp, e: f64, h: f64) -> Result<Self> {
        assert!(h > 0.0, "CP step needs h > 0");
        let n = decomp.values.len();
        let mut kernels = Vec::with_capacity(n);
        let mut u = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut du = vec![0.0; n];
        let mut dw = vec![0.0; n];
        let mut dup = vec![0.0; n];
        let h2 = h * h;
        for k in 0..n {
            let z = (decomp.values[k] - e) * h2;
            let kv = eval_kernels(z)?;
            u[k] = kv.xi;
            w[k] = h * kv.eta0;
            up[k] = z / h * kv.eta0;
            du[k] = -0.5 * h2 * kv.eta0;
            dw[k] = -0.5 * h2 * h * kv.eta1;
            dup[k] = -h * kv.eta0 - 0.5 * z * h * kv.eta1;
            kernels.push(kv);
        }
        let dv = &decomp.vectors;
        Ok(CpStep {
            h,
            e,
            decomp,
            u: rotate_diag(dv, &u),
            w: rotate_diag(dv, &w),
            up: rotate_diag(dv, &up),
            wp: rotate_diag(dv, &u),
            du: rotate_diag(dv, &du),
            dw: rotate_diag(dv, &dw),
            dup: rotate_diag(dv, &dup),
            dwp: rotate_diag(dv, &du),
            kernels,
        })
    }

    /// Convenience for a constant potential `v0` (diagonalized on the fly).
    pub fn for_constant(v0: &SymMatrix, e: f64, h: f64) -> Result<OwnedStep> {
        let decomp = sym_eig(v0)?;
        OwnedStep::new(decomp, e, h)
    }

    pub fn n(&self) -> usize {
        self.kernels.len()
    }

    /// `UᵀW' - U'ᵀW`, the identity for an exact symplectic transfer matrix.
    pub fn wronskian(&self) -> Mat {
        self.u.transpose() * &self.wp - self.up.transpose() * &self.w
    }

    /// Full 2n×2n transfer matrix.
    pub fn transfer(&self) -> Mat {
        let n = self.n();
        let mut t = Mat::zeros(2 * n, 2 * n);
        t.view_mut((0, 0), (n, n)).copy_from(&self.u);
        t.view_mut((0, n), (n, n)).copy_from(&self.w);
        t.view_mut((n, 0), (n, n)).copy_from(&self.up);
        t.view_mut((n, n), (n, n)).copy_from(&self.wp);
        t
    }
}

/// A step that owns its diagonalization (used for constant test potentials).
#[derive(Debug, Clone)]
pub struct OwnedStep {
    decomp: EigDecomp,
    e: f64,
    h: f64,
}

impl OwnedStep {
    pub fn new(decomp: EigDecomp, e: f64, h: f64) -> Result<Self> {
        CpStep::build(&decomp, e, h)?;
        Ok(OwnedStep { decomp, e, h })
    }

    pub fn step(&self) -> CpStep<'_> {
        CpStep::build(&self.decomp, self.e, self.h).expect("validated on construction")
    }
}

/// Mesh together with the per-interval averages and diagonalizations,
/// shared read-only by every trial energy.
#[derive(Debug, Clone)]
pub struct MeshCache {
    pub mesh: Mesh,
    pub intervals: Vec<Interval>,
}

impl MeshCache {
    pub fn new(problem: &ProblemDef, mesh: Mesh) -> Result<Self> {
        let intervals = mesh
            .points()
            .windows(2)
            .map(|w| Interval::from_problem(problem, w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(MeshCache { mesh, intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        self.mesh.points()
    }

    /// Lowest eigenvalue of any interval average.
    pub fn min_level(&self) -> f64 {
        self.intervals.iter().map(Interval::min_level).fold(f64::INFINITY, f64::min)
    }
}
