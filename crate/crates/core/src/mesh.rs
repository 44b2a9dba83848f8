//! Energy-independent meshes: tolerance-driven construction and the
//! staggered reference mesh used for error estimation.

use crate::cp::legendre_moments;
use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::problems::ProblemDef;

pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-2;
pub const INITIAL_INTERVALS: usize = 16;
pub const MAX_INTERVALS: usize = 10_000_000;

/// Strictly increasing mesh points `a = x₀ < … < x_N = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    points: Vec<f64>,
}

impl Mesh {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidProblem("a mesh needs at least one interval".into()));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProblem("mesh points must be finite and strictly increasing".into()));
        }
        Ok(Mesh { points })
    }

    pub fn uniform(a: f64, b: f64, intervals: usize) -> Result<Self> {
        let mut pts: Vec<f64> = (0..=intervals).map(|i| a + (b - a) * i as f64 / intervals as f64).collect();
        if let Some(last) = pts.last_mut() {
            *last = b;
        }
        Self::from_points(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn steps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn a(&self) -> f64 {
        self.points[0]
    }

    pub fn b(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Every interval split in two.
    pub fn bisected(&self) -> Mesh {
        let mut pts = Vec::with_capacity(2 * self.points.len());
        for w in self.points.windows(2) {
            pts.push(w[0]);
            pts.push(0.5 * (w[0] + w[1]));
        }
        pts.push(self.b());
        Mesh { points: pts }
    }
}

pub fn check_tolerance(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::Tolerance(tol));
    }
    Ok(())
}

/// Local error proxy of the constant-potential step on `[lo, hi]`:
/// `‖V̄₁‖∞·h²` with `V̄₁` the first Legendre coefficient of `V`.
pub fn local_error_proxy(problem: &ProblemDef, lo: f64, hi: f64) -> Result<f64> {
    let (_, slope) = legendre_moments(problem, lo, hi)?;
    let h = hi - lo;
    Ok(norm_inf(&slope) * h * h)
}

/// Starts from 16 uniform intervals and bisects every interval whose proxy
/// exceeds `tol`. The energy is never consulted, so one mesh serves all
/// eigenvalues.
pub fn build_mesh(problem: &ProblemDef, tol: f64) -> Result<Mesh> {
    check_tolerance(tol)?;
    let mut pending: Vec<(f64, f64)> = Mesh::uniform(problem.a, problem.b, INITIAL_INTERVALS)?
        .points()
        .windows(2)
        .map(|w| (w[0], w[1]))
        .rev()
        .collect();
    let mut accepted = vec![problem.a];
    // depth-first, left to right, so accepted points stay sorted
    while let Some((lo, hi)) = pending.pop() {
        if local_error_proxy(problem, lo, hi)? <= tol {
            accepted.push(hi);
            if accepted.len() > MAX_INTERVALS + 1 {
                return Err(Error::MeshInfeasible { limit: MAX_INTERVALS });
            }
        } else {
            let mid = 0.5 * (lo + hi);
            if !(lo < mid && mid < hi) || accepted.len() + pending.len() + 2 > MAX_INTERVALS {
                return Err(Error::MeshInfeasible { limit: MAX_INTERVALS });
            }
            pending.push((mid, hi));
            pending.push((lo, mid));
        }
    }
    *accepted.last_mut().unwrap() = problem.b;
    Mesh::from_points(accepted)
}

/// Reference mesh with steps `h₁/4, h₁/4, (h₁+h₂)/4, (h₁+h₂)/4, …,
/// (h_{N-1}+h_N)/4, (h_{N-1}+h_N)/4, h_N/4, h_N/4`. Its interior points
/// are in general not points of the original mesh.
pub fn reference_mesh(m: &Mesh) -> Mesh {
    let h = m.steps();
    let mut steps = Vec::with_capacity(2 * h.len() + 2);
    steps.push(h[0] / 4.0);
    steps.push(h[0] / 4.0);
    for w in h.windows(2) {
        let s = (w[0] + w[1]) / 4.0;
        steps.push(s);
        steps.push(s);
    }
    steps.push(h[h.len() - 1] / 4.0);
    steps.push(h[h.len() - 1] / 4.0);

    // Anchor each pair of steps on the original grid: the points after the
    // (2i+1)-th and (2i+2)-th steps sit at x_i + h_i/4 + (h_i + h_{i+1})/4 …
    // Accumulating from a keeps the sum telescoping; the end is pinned to b.
    let mut pts = Vec::with_capacity(steps.len() + 1);
    let mut x = m.a();
    pts.push(x);
    for s in &steps[..steps.len() - 1] {
        x += s;
        pts.push(x);
    }
    pts.push(m.b());
    Mesh { points: pts }
}
