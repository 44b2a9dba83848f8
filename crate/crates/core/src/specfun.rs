//! The ξ / η₀ / η₁ kernel functions of the constant-reference-potential
//! propagator.
//!
//! With `z = (V - E) h²` the solutions of `y'' = (V - E) y` over a step `h`
//! are built from
//!
//! ```text
//! ξ(z)  = cos(√|z|)          z ≤ 0        cosh(√z)          z > 0
//! η₀(z) = sin(√|z|) / √|z|   z < 0        sinh(√z) / √z     z > 0,  η₀(0) = 1
//! η₁(z) = (ξ(z) - η₀(z)) / z,                                        η₁(0) = 1/3
//! ```
//!
//! Near `z = 0` all three are summed from their Taylor series so that the
//! difference quotient in η₁ does not cancel.

use crate::error::{Error, Result};

/// Below this |z| the Taylor series are used.
pub const SERIES_THRESHOLD: f64 = 0.1;

/// Number of series terms. With |z| < 0.1 the first omitted term of ξ is
/// below 0.1¹²/24! ≈ 1.6e-36.
const SERIES_TERMS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValues {
    pub z: f64,
    pub xi: f64,
    pub eta0: f64,
    pub eta1: f64,
}

impl KernelValues {
    /// dξ/dz
    pub fn dxi_dz(&self) -> f64 {
        0.5 * self.eta0
    }

    /// dη₀/dz
    pub fn deta0_dz(&self) -> f64 {
        0.5 * self.eta1
    }
}

fn series(z: f64) -> (f64, f64, f64) {
    // term_k(ξ) = z^k/(2k)!, term_k(η₀) = z^k/(2k+1)!, term_k(η₁) = z^k (2k+2)/(2k+3)!
    let mut xi = 0.0;
    let mut eta0 = 0.0;
    let mut eta1 = 0.0;
    let mut zk = 1.0;
    let mut fact_2k = 1.0; // (2k)!
    for k in 0..SERIES_TERMS {
        let kf = k as f64;
        if k > 0 {
            fact_2k *= (2.0 * kf - 1.0) * (2.0 * kf);
        }
        let fact_2k1 = fact_2k * (2.0 * kf + 1.0);
        let fact_2k3 = fact_2k1 * (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
        xi += zk / fact_2k;
        eta0 += zk / fact_2k1;
        eta1 += zk * (2.0 * kf + 2.0) / fact_2k3;
        zk *= z;
    }
    (xi, eta0, eta1)
}

pub fn eval_kernels(z: f64) -> Result<KernelValues> {
    if !z.is_finite() {
        return Err(Error::Domain(z));
    }
    let (xi, eta0, eta1) = if z.abs() < SERIES_THRESHOLD {
        series(z)
    } else if z < 0.0 {
        let w = (-z).sqrt();
        let xi = w.cos();
        let eta0 = w.sin() / w;
        (xi, eta0, (xi - eta0) / z)
    } else {
        let w = z.sqrt();
        let xi = w.cosh();
        let eta0 = w.sinh() / w;
        (xi, eta0, (xi - eta0) / z)
    };
    Ok(KernelValues { z, xi, eta0, eta1 })
}

/// (dξ/dz, dη₀/dz)
pub fn eval_kernel_derivatives(z: f64) -> Result<(f64, f64)> {
    let k = eval_kernels(z)?;
    Ok((k.dxi_dz(), k.deta0_dz()))
}
