//! Matrix Prüfer phases and the eigenvalue index 𝓘(E).
//!
//! Angles of a symmetric `Ψ` are `φ_j = atan γ_j`. For a pair `(N, D)` with
//! orthonormal columns, `D + iN` is unitary and `Θ = (D+iN)(D+iN)ᵀ` has
//! eigenvalues `e^{2iφ_j}`, which gives the angles modulo π even where
//! `Ψ` itself is infinite. Full phase sums (not just mod π) are carried
//! interval by interval with the Ω matrix, whose angles are those of the
//! start-of-interval pair rotated channel-wise by the scalar Prüfer angles
//! `θ_j` of the constant-potential step.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};

use crate::cp::CpStep;
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, thin_qr, SymMatrix};
use crate::riccati::{stack, unitary, RiccatiState, Side};
use crate::specfun::eval_kernels;

type CMat = DMatrix<Complex<f64>>;

/// Pre-rounding distance of 𝓘 from an integer that is still accepted.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Folds an angle into `[0, π)`.
pub fn fold_angle(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// `(Σρ_j, ρ)` with `ρ_j = atan γ_j ∈ [0, π)` over the eigenvalues of `m`.
pub fn principal_angles(m: &SymMatrix) -> Result<(f64, Vec<f64>)> {
    let eig = sym_eig(m)?;
    let rho: Vec<f64> = eig.values.iter().map(|g| fold_angle(g.atan())).collect();
    Ok((rho.iter().sum(), rho))
}

fn eigenvalues_complex(m: CMat) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 10_000).ok_or(Error::NoConvergence { sweeps: 10_000 })?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Half arguments of the eigenvalues of a unitary matrix, folded to `[0, π)`.
fn half_arguments(m: CMat) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = eigenvalues_complex(m)?.into_iter().map(|z| fold_angle(0.5 * z.arg())).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn theta_of(u: &CMat) -> CMat {
    u * u.transpose()
}

/// Angles in `[0, π)` of `Ψ = N·D⁻¹` for any full-rank Lagrangian pair.
pub fn pair_angles(n: &crate::linalg::Mat, d: &crate::linalg::Mat) -> Result<Vec<f64>> {
    let dim = n.nrows();
    let (q, _) = thin_qr(&stack(n, d));
    let u = unitary(&q.rows(0, dim).into_owned(), &q.rows(dim, dim).into_owned());
    half_arguments(theta_of(&u))
}

/// Continuous Prüfer angle at `δ = h` of `y'' = -d·y`, `y(0) = 0`, `y'(0) = 1`
/// (`tan θ = δη₀(-dδ²)/ξ(-dδ²)`, `θ(0) = 0`).
pub fn prufer_theta(d: f64, h: f64) -> Result<f64> {
    if d > 0.0 {
        let k = d.sqrt();
        let w = k * h;
        let m = (w / PI).round();
        let r = w - m * PI;
        Ok(m * PI + (r.tan() / k).atan())
    } else {
        let kv = eval_kernels(-d * h * h)?;
        Ok((h * kv.eta0).atan2(kv.xi))
    }
}

/// `(Σs_j, Σκ_j)` with `θ_j = s_jπ + κ_j`, `κ_j ∈ [0, π)`, so that
/// `S(δξ⁻¹η₀) = Σκ_j + πΣs_j`.
pub fn interval_node_count(d: &[f64], h: f64) -> Result<(i64, f64)> {
    let mut s = 0i64;
    let mut kappa = 0.0;
    for &dj in d {
        let th = prufer_theta(dj, h)?;
        let sj = (th / PI).floor();
        s += sj as i64;
        kappa += th - sj * PI;
    }
    Ok((s, kappa))
}

/// Continuous phase sum `S` of one side, in the stored orientation (the
/// right side carries the sum of its mirror image).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub s: f64,
    pub x: f64,
    pub side: Side,
}

impl PhaseState {
    /// Phase at the boundary: the principal angles of the initial pair.
    pub fn new(state: &RiccatiState) -> Result<Self> {
        let (n, d) = state.stored();
        let s = pair_angles(n, d)?.iter().sum();
        Ok(PhaseState { s, x: state.x, side: state.side })
    }

    /// `S(Ψ_R)` in the physical orientation: `nπ - S̃`.
    pub fn physical(&self, n: usize) -> f64 {
        match self.side {
            Side::Left => self.s,
            Side::Right => n as f64 * PI - self.s,
        }
    }
}

/// Phase update across one interval. `before` and `after` are the pair
/// states at the two ends (in propagation order).
///
/// `S(x) = S(x_i) + Σθ_j + Σρ_j − Στ_j` where `ρ_j` are the principal angles
/// of `Ψ(x)` and `τ_j` those of `Ω = (I − FΨᴰ)⁻¹(Ψᴰ + F)`, `F = diag(tan θ_j)`.
pub fn phase_step(phase: &mut PhaseState, before: &RiccatiState, after: &RiccatiState, step: &CpStep) -> Result<()> {
    let dim = step.n();
    let mut theta_sum = 0.0;
    let mut rot = Vec::with_capacity(dim);
    for j in 0..dim {
        let th = prufer_theta(step.e - step.decomp.values[j], step.h)?;
        theta_sum += th;
        rot.push(Complex::new(th.cos(), th.sin()));
    }

    // Ω's pair in the decoupling basis is the start pair with row j turned
    // by θ_j: (C·N + S·D, C·D − S·N), i.e. D + iN picks up a factor e^{iθ_j}.
    let (n0, d0) = before.stored();
    let dv_t = step.decomp.vectors.transpose();
    let mut u = unitary(&(&dv_t * n0), &(&dv_t * d0));
    for (j, z) in rot.iter().enumerate() {
        for c in 0..dim {
            u[(j, c)] *= *z;
        }
    }
    let tau: f64 = half_arguments(theta_of(&u))?.iter().sum();
    let rho: f64 = half_arguments(theta_of(&after.stored_unitary()))?.iter().sum();

    phase.s += theta_sum + rho - tau;
    phase.x = after.x;
    Ok(())
}

/// Angles `ω_j ∈ [0, π)` with `tan ω_j` the eigenvalues of
/// `(Ψ_L − Ψ_R)(I + Ψ_LΨ_R)⁻¹`, computed as half arguments of the
/// eigenvalues of `Θ_R^* Θ_L`.
pub fn omega_angles(left: &RiccatiState, right: &RiccatiState) -> Result<Vec<f64>> {
    let (nl, dl) = left.pair();
    let (nr, dr) = right.pair();
    let tl = theta_of(&unitary(&nl, &dl));
    let tr = theta_of(&unitary(&nr, &dr));
    half_arguments(tr.adjoint() * tl)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    /// 𝓘(E), the number of eigenvalues below E
    pub index_fn: usize,
    pub omega_sum: f64,
    pub phases_l: f64,
    pub phases_r: f64,
    /// distance of the unrounded value from the nearest integer
    pub residual: f64,
}

/// `𝓘 = (S_L − S_R − Σω)/π + n` at the matching point, with both states
/// positioned there and `S_R` in physical orientation.
pub fn index_function(left: &RiccatiState, right: &RiccatiState, phase_l: &PhaseState, phase_r: &PhaseState, energy: f64) -> Result<IndexReport> {
    let n = left.dim();
    let omega_sum: f64 = omega_angles(left, right)?.iter().sum();
    let s_l = phase_l.physical(n);
    let s_r = phase_r.physical(n);
    let raw = (s_l - s_r - omega_sum) / PI + n as f64;
    let rounded = raw.round();
    let residual = (raw - rounded).abs();
    if residual > INTEGRALITY_TOL || rounded < 0.0 {
        return Err(Error::IndexIntegrity { energy, residual: raw - rounded });
    }
    Ok(IndexReport { index_fn: rounded as usize, omega_sum, phases_l: s_l, phases_r: s_r, residual })
}
