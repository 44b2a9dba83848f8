//! Bound states of coupled-channel Schrödinger systems
//! `-Y'' + V(x)·Y = E·Y` on a finite interval, computed with a
//! constant-reference-potential propagator for the R-matrix `Ψ = Y·(Y')⁻¹`
//! and a matrix Prüfer index that counts eigenvalues below a trial energy.

pub mod cp;
pub mod eigfun;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod prufer;
pub mod problems;
pub mod riccati;
pub mod shooting;
pub mod specfun;

pub use error::{Error, Result};
