//! Skewed, kurtosis-damped test distributions on the simulation ball.
//!
//! Per axis `f(v) = 2 phi(v) Phi(alpha v) exp(-beta v^4 / 4)`; the 3-D density
//! is the normalized product restricted to `|v| <= v_R`.

mod quadrature;
mod sampling;

use serde::Serialize;
use libm::erfc;

use crate::error::{Error, Result};

pub use quadrature::{
    normalization_constant, reference_moment, reference_table, reference_tail, QuadratureGrid,
    ReferenceTable,
};
pub use sampling::{sample, sample_dsmc_like, sample_swpm_like, Sampler};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistParams {
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub v_r: f64,
}

impl Default for DistParams {
    fn default() -> Self {
        Self {
            alpha: [0.0; 3],
            beta: [0.0; 3],
            v_r: 7.0,
        }
    }
}

impl DistParams {
    /// The skewed test case: `alpha = (0.75, 0, 0)`, `beta = (0.02, 0, 0)`.
    pub fn skewed() -> Self {
        Self {
            alpha: [0.75, 0.0, 0.0],
            beta: [0.02, 0.0, 0.0],
            v_r: 7.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().chain(&self.beta).any(|x| !x.is_finite()) {
            return Err(Error::Config("alpha and beta must be finite".into()));
        }
        if self.beta.iter().any(|&b| b < 0.0) {
            return Err(Error::Config(format!("beta must be nonnegative (got {:?})", self.beta)));
        }
        if !(self.v_r.is_finite() && self.v_r > 0.0) {
            return Err(Error::Config(format!("v_R must be positive (got {})", self.v_r)));
        }
        Ok(())
    }

    /// Unnormalized density (no ball restriction).
    pub fn density(&self, v: [f64; 3]) -> f64 {
        (0..3).map(|i| pdf1d(v[i], self.alpha[i], self.beta[i])).product()
    }
}

/// Standard normal cumulative distribution.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn pdf1d(v: f64, alpha: f64, beta: f64) -> f64 {
    2.0 * INV_SQRT_2PI * (-0.5 * v * v).exp() * std_normal_cdf(alpha * v) * (-0.25 * beta * v.powi(4)).exp()
}

/// `C * prod pdf1d` inside the ball, zero outside.
pub fn pdf3d(v: [f64; 3], params: &DistParams, c: f64) -> f64 {
    if v.iter().map(|x| x * x).sum::<f64>() > params.v_r * params.v_r {
        return 0.0;
    }
    c * params.density(v)
}

/// Mass of the standard Maxwellian at speeds `>= r`.
pub fn maxwell_speed_tail(r: f64) -> f64 {
    erfc(r / std::f64::consts::SQRT_2) + (2.0 / std::f64::consts::PI).sqrt() * r * (-0.5 * r * r).exp()
}
