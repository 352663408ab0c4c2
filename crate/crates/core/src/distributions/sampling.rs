//! Seeded samplers.
//!
//! DSMC-like: equal weights, each component drawn from its tabulated 1-D
//! cumulative, redrawn until the velocity lies in the ball. Samples crowd the
//! peak, so the far tail is rarely populated.
//!
//! SWPM-like: positions uniform in the ball, weights proportional to the
//! density. The tail is sampled as densely as the core.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{pdf1d, DistParams};
use crate::ensemble::{pairwise_sum, Ensemble, WeightedParticle};
use crate::error::{Error, Result};

const TABLE_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sampler {
    Dsmc,
    Swpm,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dsmc" => Ok(Sampler::Dsmc),
            "swpm" => Ok(Sampler::Swpm),
            other => Err(Error::Parse(format!("unknown sampler `{other}` (dsmc|swpm)"))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::Dsmc => "dsmc",
            Sampler::Swpm => "swpm",
        })
    }
}

pub fn sample(sampler: Sampler, params: &DistParams, n: usize, seed: u64) -> Ensemble {
    match sampler {
        Sampler::Dsmc => sample_dsmc_like(params, n, seed),
        Sampler::Swpm => sample_swpm_like(params, n, seed),
    }
}

/// Cumulative of `pdf1d` on `[-v_R, v_R]` at equally spaced nodes, using
/// Simpson's rule on each interval.
struct InverseCdf {
    nodes: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new(alpha: f64, beta: f64, v_r: f64) -> Self {
        let h = 2.0 * v_r / (TABLE_NODES - 1) as f64;
        let nodes: Vec<f64> = (0..TABLE_NODES).map(|i| -v_r + i as f64 * h).collect();
        let f = |v: f64| pdf1d(v, alpha, beta);
        let mut cdf = Vec::with_capacity(TABLE_NODES);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in nodes.windows(2) {
            acc += h / 6.0 * (f(w[0]) + 4.0 * f(0.5 * (w[0] + w[1])) + f(w[1]));
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Self { nodes, cdf }
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.nodes[i - 1] + t * (self.nodes[i] - self.nodes[i - 1])
    }
}

pub fn sample_dsmc_like(params: &DistParams, n: usize, seed: u64) -> Ensemble {
    let tables: Vec<InverseCdf> = (0..3)
        .map(|i| InverseCdf::new(params.alpha[i], params.beta[i], params.v_r))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = 1.0 / n as f64;
    let r2_max = params.v_r * params.v_r;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = [0, 1, 2].map(|i| tables[i].invert(rng.random::<f64>()));
        if v.iter().map(|x| x * x).sum::<f64>() <= r2_max {
            out.push(WeightedParticle { velocity: v, weight });
        }
    }
    Ensemble::new(out)
}

pub fn sample_swpm_like(params: &DistParams, n: usize, seed: u64) -> Ensemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let velocities: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let r = params.v_r * rng.random::<f64>().cbrt();
            let ct = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            [r * st * phi.cos(), r * st * phi.sin(), r * ct]
        })
        .collect();
    let f: Vec<f64> = velocities.iter().map(|&v| params.density(v)).collect();
    let total = pairwise_sum(&f);
    Ensemble::new(
        velocities
            .into_iter()
            .zip(f)
            .map(|(velocity, fv)| WeightedParticle {
                velocity,
                weight: fv / total,
            })
            .collect(),
    )
}
