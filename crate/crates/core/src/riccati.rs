//! Propagation of the R-matrix `Ψ = Y·(Y')⁻¹` as a projective pair.
//!
//! The state holds an orthonormal `2n×n` basis `[N; D]` of the solution
//! subspace (`Ψ = N·D⁻¹`) together with its energy derivative. One CP step
//! maps the pair by the transfer matrix, which is the Möbius recurrence for
//! `Ψ` without ever forming the inverse, so poles of `Ψ` are crossed freely.
//! A QR factorization after each step keeps the two blocks at unit scale;
//! growing and decaying closed channels therefore never collapse onto one
//! direction the way explicit `Y` propagation does.
//!
//! Right-side states are stored mirrored (`x ↦ a + b - x`, which flips the
//! sign of `Y'`), so both sides advance with the same forward step.

use nalgebra::Complex;

use crate::cp::CpStep;
use crate::error::{Error, Result};
use crate::linalg::{right_divide, thin_qr, Mat, SymMatrix};
use crate::problems::validate_boundary;

/// Extraction of `Ψ` fails above this condition number of `D`.
pub const EXTRACTION_COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// propagated from `a` towards larger x
    Left,
    /// propagated from `b` towards smaller x
    Right,
}

#[derive(Debug, Clone)]
pub struct RiccatiState {
    pub x: f64,
    pub side: Side,
    /// stored pair, mirrored for `Side::Right`
    n: Mat,
    d: Mat,
    dn: Mat,
    dd: Mat,
}

impl RiccatiState {
    fn from_physical(x: f64, side: Side, n: Mat, d: Mat) -> Self {
        let dim = n.nrows();
        let d = if side == Side::Right { -d } else { d };
        let x_full = stack(&n, &d);
        let gram = x_full.transpose() * &x_full;
        let q = if (gram - Mat::identity(dim, dim)).abs().max() < 1e-14 { x_full } else { thin_qr(&x_full).0 };
        RiccatiState {
            x,
            side,
            n: q.rows(0, dim).into_owned(),
            d: q.rows(dim, dim).into_owned(),
            dn: Mat::zeros(dim, dim),
            dd: Mat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.n.nrows()
    }

    /// Physical pair `(N, D)` with `Ψ = N·D⁻¹`.
    pub fn pair(&self) -> (Mat, Mat) {
        match self.side {
            Side::Left => (self.n.clone(), self.d.clone()),
            Side::Right => (self.n.clone(), -&self.d),
        }
    }

    /// Stored (forward-oriented) pair.
    pub(crate) fn stored(&self) -> (&Mat, &Mat) {
        (&self.n, &self.d)
    }

    /// Orthonormal `2n×n` basis of `(y, y')` values in physical orientation.
    pub fn basis(&self) -> Mat {
        let (n, d) = self.pair();
        stack(&n, &d)
    }

    /// Scales both halves of the pair (and its derivative) by `s`; used to
    /// check that extraction is projective.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.n *= s;
        out.d *= s;
        out.dn *= s;
        out.dd *= s;
        out
    }

    /// Applies one CP step in the stored orientation: interval `[x, x+h]`
    /// for the left side, `[x-h, x]` for the right side.
    pub(crate) fn advance(&mut self, step: &CpStep) {
        let n_new = &step.u * &self.n + &step.w * &self.d;
        let d_new = &step.up * &self.n + &step.wp * &self.d;
        let dn_new = &step.du * &self.n + &step.dw * &self.d + &step.u * &self.dn + &step.w * &self.dd;
        let dd_new = &step.dup * &self.n + &step.dwp * &self.d + &step.up * &self.dn + &step.wp * &self.dd;
        self.reorthonormalize(n_new, d_new, dn_new, dd_new);
        match self.side {
            Side::Left => self.x += step.h,
            Side::Right => self.x -= step.h,
        }
    }

    fn reorthonormalize(&mut self, n: Mat, d: Mat, dn: Mat, dd: Mat) {
        let dim = n.nrows();
        let x = stack(&n, &d);
        let dx = stack(&dn, &dd);
        let (q, r) = thin_qr(&x);
        // dX·R⁻¹ with the component along span(Q) removed; that component
        // only reparametrizes the basis and leaves dΨ unchanged.
        let rt = r.transpose();
        let dx_r = rt
            .solve_lower_triangular(&dx.transpose())
            .map(|m| m.transpose())
            .unwrap_or_else(|| dx.clone());
        let dx_perp = &dx_r - &q * (q.transpose() * &dx_r);
        self.n = q.rows(0, dim).into_owned();
        self.d = q.rows(dim, dim).into_owned();
        self.dn = dx_perp.rows(0, dim).into_owned();
        self.dd = dx_perp.rows(dim, dim).into_owned();
    }

    /// `‖[N; D]‖₂ / σ_min(D)`, which bounds `‖Ψ‖₂` from above for any
    /// scaling of the pair; infinite when `D` is singular.
    pub fn extraction_condition(&self) -> f64 {
        let smin = self.d.clone().singular_values().min();
        let smax = stack(&self.n, &self.d).singular_values().max();
        if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        }
    }

    /// `Ψ = N·D⁻¹`, symmetrized.
    pub fn extract_psi(&self) -> Result<SymMatrix> {
        let (n, d) = self.pair();
        let c = self.extraction_condition();
        if c > EXTRACTION_COND_LIMIT {
            return Err(Error::SingularExtraction { x: self.x, cond: c });
        }
        Ok(SymMatrix::from_matrix(right_divide(&n, &d)?))
    }

    /// `∂Ψ/∂E = (dN - Ψ·dD)·D⁻¹`, symmetrized.
    pub fn extract_psi_e(&self) -> Result<SymMatrix> {
        let psi = self.extract_psi()?;
        let (n_d, d_d) = match self.side {
            Side::Left => (self.dn.clone(), self.dd.clone()),
            Side::Right => (self.dn.clone(), -&self.dd),
        };
        let (_, d) = self.pair();
        let num = n_d - psi.as_matrix() * d_d;
        Ok(SymMatrix::from_matrix(right_divide(&num, &d)?))
    }

    /// `Ψ` and `∂Ψ/∂E` together.
    pub fn extract(&self) -> Result<(SymMatrix, SymMatrix)> {
        Ok((self.extract_psi()?, self.extract_psi_e()?))
    }

    /// Unitary `D + iN` of the stored pair. Its symmetric square
    /// `Θ = (D+iN)(D+iN)ᵀ` has eigenvalues `e^{2iφ}` with `tan φ` the
    /// eigenvalues of the stored `Ψ`.
    pub(crate) fn stored_unitary(&self) -> nalgebra::DMatrix<Complex<f64>> {
        unitary(&self.n, &self.d)
    }
}

pub(crate) fn unitary(n: &Mat, d: &Mat) -> nalgebra::DMatrix<Complex<f64>> {
    nalgebra::DMatrix::from_fn(n.nrows(), n.ncols(), |i, j| Complex::new(d[(i, j)], n[(i, j)]))
}

pub(crate) fn stack(top: &Mat, bottom: &Mat) -> Mat {
    let (r, c) = top.shape();
    let mut out = Mat::zeros(2 * r, c);
    out.rows_mut(0, r).copy_from(top);
    out.rows_mut(r, r).copy_from(bottom);
    out
}

fn check_shapes(m1: &Mat, m2: &Mat) -> Result<()> {
    if !m1.is_square() || m1.shape() != m2.shape() {
        return Err(Error::Dimension(format!(
            "boundary matrices must be square and equal in size, got {:?} and {:?}",
            m1.shape(),
            m2.shape()
        )));
    }
    Ok(())
}

/// State at `a` for `A₁Y(a) + A₂Y'(a) = 0`: the pair `(Y, Y') = (A₂ᵀ, -A₁ᵀ)`,
/// so `Ψ_L(a) = -A₂ᵀA₁⁻ᵀ`. No inversion is done, so a singular `A₁`
/// (Neumann) needs no special case.
pub fn init_left(a1: &Mat, a2: &Mat, a: f64) -> Result<RiccatiState> {
    check_shapes(a1, a2)?;
    validate_boundary("left", a1, a2)?;
    Ok(RiccatiState::from_physical(a, Side::Left, a2.transpose(), -a1.transpose()))
}

/// State at `b` for `B₁Y(b) + B₂Y'(b) = 0`, `Ψ_R(b) = -B₂ᵀB₁⁻ᵀ`.
pub fn init_right(b1: &Mat, b2: &Mat, b: f64) -> Result<RiccatiState> {
    check_shapes(b1, b2)?;
    validate_boundary("right", b1, b2)?;
    Ok(RiccatiState::from_physical(b, Side::Right, b2.transpose(), -b1.transpose()))
}

/// Advances a left state across `[x, x+h]`.
pub fn step_left(state: &mut RiccatiState, step: &CpStep) {
    assert_eq!(state.side, Side::Left, "step_left on a right-side state");
    state.advance(step);
}

/// Advances a right state across `[x-h, x]`.
pub fn step_right(state: &mut RiccatiState, step: &CpStep) {
    assert_eq!(state.side, Side::Right, "step_right on a left-side state");
    state.advance(step);
}

/// `Y'(x+h) = (U'Ψ(x) + W')·Y'(x)`.
pub fn propagate_yprime(yp: &Mat, psi: &SymMatrix, step: &CpStep) -> Mat {
    (&step.up * psi.as_matrix() + &step.wp) * yp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::{CpStep, OwnedStep};
    use crate::linalg::sym_eig;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn scalar_step(v: f64, e: f64, h: f64) -> OwnedStep {
        CpStep::for_constant(&SymMatrix::from_diagonal(&[v]), e, h).unwrap()
    }

    fn dirichlet(n: usize) -> (Mat, Mat) {
        (Mat::identity(n, n), Mat::zeros(n, n))
    }

    #[test]
    fn dirichlet_start_is_zero() {
        let (a1, a2) = dirichlet(2);
        let s = init_left(&a1, &a2, 0.0).unwrap();
        assert_eq!(s.extract_psi().unwrap().as_matrix().norm(), 0.0);
        assert_eq!(s.extract_psi_e().unwrap().as_matrix().norm(), 0.0);
    }

    #[test]
    fn neumann_start_is_representable() {
        let s = init_left(&Mat::zeros(1, 1), &Mat::identity(1, 1), 0.0).unwrap();
        assert!(matches!(s.extract_psi(), Err(Error::SingularExtraction { .. })));
        // after a quarter period of cos x the pole has become a zero
        let st = scalar_step(0.0, 1.0, PI / 2.0);
        let mut s = s;
        step_left(&mut s, &st.step());
        assert!(s.extract_psi().unwrap()[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn non_conjoint_boundary_rejected() {
        let a2 = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(init_left(&Mat::identity(2, 2), &a2, 0.0), Err(Error::InvalidBoundary(_))));
        assert!(matches!(init_right(&Mat::identity(2, 2), &a2, 0.0), Err(Error::InvalidBoundary(_))));
    }

    #[test]
    fn free_particle_quarter_and_pole_crossing() {
        let (a1, a2) = dirichlet(1);
        let mut s = init_left(&a1, &a2, 0.0).unwrap();
        step_left(&mut s, &scalar_step(0.0, 1.0, PI / 4.0).step());
        assert_relative_eq!(s.extract_psi().unwrap()[(0, 0)], 1.0, epsilon = 1e-14);

        let mut s = init_left(&a1, &a2, 0.0).unwrap();
        step_left(&mut s, &scalar_step(0.0, 1.0, 3.0 * PI / 4.0).step());
        assert_relative_eq!(s.extract_psi().unwrap()[(0, 0)], -1.0, epsilon = 1e-14);
        assert_relative_eq!(s.x, 3.0 * PI / 4.0);
    }

    #[test]
    fn right_side_free_particle() {
        let (b1, b2) = dirichlet(1);
        let mut s = init_right(&b1, &b2, PI).unwrap();
        step_right(&mut s, &scalar_step(0.0, 1.0, PI / 4.0).step());
        assert_relative_eq!(s.x, 3.0 * PI / 4.0);
        assert_relative_eq!(s.extract_psi().unwrap()[(0, 0)], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn psi_e_signs() {
        let (a1, a2) = dirichlet(1);
        let e = 2.0;
        let mut l = init_left(&a1, &a2, 0.0).unwrap();
        let mut r = init_right(&a1, &a2, 1.0).unwrap();
        let st = scalar_step(0.0, e, 0.5);
        for _ in 0..2 {
            step_left(&mut l, &st.step());
            step_right(&mut r, &st.step());
        }
        assert!(l.extract_psi_e().unwrap()[(0, 0)] > 0.0);
        assert!(r.extract_psi_e().unwrap()[(0, 0)] < 0.0);
        // y = sin(kx)/k: Ψ = tan(k)/k, dΨ/dE by hand
        let k = e.sqrt();
        let dpsi = (1.0 / (k * k.cos().powi(2)) - k.tan() / (k * k)) / (2.0 * k);
        assert_relative_eq!(l.extract_psi_e().unwrap()[(0, 0)], dpsi, epsilon = 1e-12);
    }

    #[test]
    fn decoupled_matches_scalar_channels() {
        let v = SymMatrix::from_diagonal(&[-3.0, 2.0]);
        let (a1, a2) = dirichlet(2);
        let mut s = init_left(&a1, &a2, 0.0).unwrap();
        let st = CpStep::for_constant(&v, 0.5, 0.7).unwrap();
        step_left(&mut s, &st.step());
        step_left(&mut s, &st.step());
        let psi = s.extract_psi().unwrap();
        let k = 3.5f64.sqrt();
        assert_relative_eq!(psi[(0, 0)], (1.4 * k).tan() / k, epsilon = 1e-13);
        let q = 1.5f64.sqrt();
        assert_relative_eq!(psi[(1, 1)], (1.4 * q).tanh() / q, epsilon = 1e-13);
        assert!(psi[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn extraction_is_projective() {
        let (a1, a2) = dirichlet(2);
        let mut s = init_left(&a1, &a2, 0.0).unwrap();
        let v = SymMatrix::from_upper(2, &[1.0, 0.5, -2.0]).unwrap();
        let st = CpStep::for_constant(&v, 0.3, 0.4).unwrap();
        step_left(&mut s, &st.step());
        let t = s.scaled(1e-200);
        assert_relative_eq!(s.extract_psi().unwrap().as_matrix(), t.extract_psi().unwrap().as_matrix(), epsilon = 1e-14);
        assert_relative_eq!(s.extract_psi_e().unwrap().as_matrix(), t.extract_psi_e().unwrap().as_matrix(), epsilon = 1e-14);
    }

    #[test]
    fn yprime_propagation() {
        let st = scalar_step(0.0, 1.0, PI / 4.0);
        let yp = propagate_yprime(&Mat::identity(1, 1), &SymMatrix::zeros(1), &st.step());
        assert_relative_eq!(yp[(0, 0)], 0.5f64.sqrt(), epsilon = 1e-15);
        let st = scalar_step(2.0, 2.0, 0.3);
        let yp = propagate_yprime(&Mat::identity(1, 1), &SymMatrix::zeros(1), &st.step());
        assert_eq!(yp[(0, 0)], 1.0);
    }

    #[test]
    fn short_step_follows_riccati_equation() {
        let v = SymMatrix::from_upper(2, &[0.4, -0.3, 1.1]).unwrap();
        let e = -0.2;
        let (a1, _) = dirichlet(2);
        let a2 = Mat::from_row_slice(2, 2, &[0.3, 0.1, 0.1, -0.5]);
        let mut s = init_left(&a1, &a2, 0.0).unwrap();
        let psi0 = s.extract_psi().unwrap();
        let h = 1e-4;
        step_left(&mut s, &CpStep::for_constant(&v, e, h).unwrap().step());
        let psi1 = s.extract_psi().unwrap();
        let vm = v.as_matrix() - Mat::identity(2, 2) * e;
        let rhs = Mat::identity(2, 2) - psi0.as_matrix() * vm * psi0.as_matrix();
        let fd = (psi1.as_matrix() - psi0.as_matrix()) / h;
        assert!((fd - rhs).abs().max() < 1e-6 * 1e2);
    }

    proptest! {
        #[test]
        fn round_trip_returns_initial_psi(
            v in prop::collection::vec(-5.0f64..5.0, 3),
            e in -5.0f64..5.0,
            h in 0.05f64..1.0,
            p in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let vm = SymMatrix::from_upper(2, &v).unwrap();
            let psi0 = SymMatrix::from_upper(2, &p).unwrap();
            let mut l = init_left(&Mat::identity(2, 2), &(-psi0.as_matrix()), 0.0).unwrap();
            let st = CpStep::for_constant(&vm, e, h).unwrap();
            step_left(&mut l, &st.step());
            let (n, d) = l.pair();
            let mut r = init_right(&d.transpose(), &(-n.transpose()), h).unwrap();
            step_right(&mut r, &st.step());
            let back = r.extract_psi().unwrap();
            prop_assert!((back.as_matrix() - psi0.as_matrix()).abs().max() < 1e-10 * (1.0 + psi0.as_matrix().abs().max()));
        }

        #[test]
        fn psi_stays_symmetric_and_psi_e_definite(
            v in prop::collection::vec(-8.0f64..8.0, 6),
            e in -4.0f64..4.0,
            steps in 1usize..12,
        ) {
            let vm = SymMatrix::from_upper(3, &v).unwrap();
            let st = CpStep::for_constant(&vm, e, 0.3).unwrap();
            let mut l = init_left(&Mat::identity(3, 3), &Mat::zeros(3, 3), 0.0).unwrap();
            for _ in 0..steps {
                step_left(&mut l, &st.step());
            }
            if let Ok((psi, dpsi)) = l.extract() {
                let (n, d) = l.pair();
                let raw = right_divide(&n, &d).unwrap();
                prop_assert!((&raw - raw.transpose()).abs().max() <= 1e-9 * (1.0 + raw.abs().max()));
                let ev = sym_eig(&dpsi).unwrap();
                prop_assert!(ev.values[0] > 0.0);
                let _ = psi;
            }
        }
    }
}
