//! Reference values by quadrature over the ball in spherical coordinates.
//!
//! Composite Gauss–Legendre in the radius (unit-length panels, with extra
//! breakpoints at tail radii), Gauss–Legendre in `cos(theta)` and the
//! trapezoid rule in the azimuth. The ball boundary is a coordinate surface,
//! so there is no indicator-function error and the rule converges
//! spectrally for these smooth densities.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use super::DistParams;
use crate::ensemble::{canonical_keys, MomentKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureGrid {
    /// Resolution parameter: azimuthal nodes; half as many polar nodes and
    /// `points / 8` radial nodes per unit of radius.
    pub points: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self { points: 128 }
    }
}

impl QuadratureGrid {
    pub fn new(points: usize) -> Self {
        Self { points: points.max(16) }
    }

    fn rule(n: usize) -> GaussLegendre {
        GaussLegendre::new(NonZeroUsize::new(n.max(2)).expect("nonzero"))
    }

    /// Calls `f(v, weight)` for every node of the shell `r_lo <= |v| <= r_hi`;
    /// the weights integrate `dv` (volume measure).
    pub fn for_each_node(&self, r_lo: f64, r_hi: f64, mut f: impl FnMut([f64; 3], f64)) {
        if !(r_hi > r_lo) {
            return;
        }
        let radial = Self::rule((self.points / 8).max(8));
        let polar = Self::rule(self.points / 2);
        let n_phi = self.points;
        let d_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let azimuth: Vec<(f64, f64)> = (0..n_phi)
            .map(|k| {
                let phi = (k as f64 + 0.5) * d_phi;
                (phi.cos(), phi.sin())
            })
            .collect();

        let mut breaks = vec![r_lo];
        let mut b = r_lo.floor() + 1.0;
        while b < r_hi {
            breaks.push(b);
            b += 1.0;
        }
        breaks.push(r_hi);

        for panel in breaks.windows(2) {
            let (a, b) = (panel[0], panel[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for &(x, wr) in radial.as_node_weight_pairs() {
                let r = mid + half * x;
                let w_r = wr * half * r * r;
                for &(ct, wt) in polar.as_node_weight_pairs() {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    let w_rt = w_r * wt * d_phi;
                    for &(cp, sp) in &azimuth {
                        f([r * st * cp, r * st * sp, r * ct], w_rt);
                    }
                }
            }
        }
    }

    /// Volume of the ball of radius `r`, by this rule.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_node(0.0, r, |_, w| acc += w);
        acc
    }
}

fn shell_mass(params: &DistParams, grid: &QuadratureGrid, r_lo: f64) -> f64 {
    let mut acc = 0.0;
    grid.for_each_node(r_lo, params.v_r, |v, w| acc += w * params.density(v));
    acc
}

/// `C` such that `C * density` integrates to one over the ball.
pub fn normalization_constant(params: &DistParams, grid: &QuadratureGrid) -> f64 {
    1.0 / shell_mass(params, grid, 0.0)
}

pub fn reference_moment(params: &DistParams, key: MomentKey, grid: &QuadratureGrid) -> f64 {
    let mut mass = 0.0;
    let mut acc = 0.0;
    grid.for_each_node(0.0, params.v_r, |v, w| {
        let f = w * params.density(v);
        mass += f;
        acc += f * key.monomial(v);
    });
    acc / mass
}

/// Probability mass at speeds in `[r, v_R]`.
pub fn reference_tail(params: &DistParams, r: f64, grid: &QuadratureGrid) -> f64 {
    shell_mass(params, grid, r.max(0.0)) / shell_mass(params, grid, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceTable {
    pub normalization: f64,
    pub moments: Vec<(MomentKey, f64)>,
    pub tails: Vec<(f64, f64)>,
}

impl ReferenceTable {
    pub fn moment(&self, key: MomentKey) -> Option<f64> {
        self.moments.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn tail(&self, r: f64) -> Option<f64> {
        self.tails.iter().find(|(x, _)| *x == r).map(|(_, v)| *v)
    }
}

/// All reference moments of order `<= max_order` (a single pass over the
/// nodes) plus the requested tails.
pub fn reference_table(
    params: &DistParams,
    max_order: u32,
    tails: &[f64],
    grid: &QuadratureGrid,
) -> ReferenceTable {
    let keys = canonical_keys(max_order);
    let mut mass = 0.0;
    let mut acc = vec![0.0; keys.len()];
    grid.for_each_node(0.0, params.v_r, |v, w| {
        let f = w * params.density(v);
        mass += f;
        for (a, k) in acc.iter_mut().zip(&keys) {
            *a += f * k.monomial(v);
        }
    });
    ReferenceTable {
        normalization: 1.0 / mass,
        moments: keys.into_iter().zip(acc.into_iter().map(|a| a / mass)).collect(),
        tails: tails
            .iter()
            .map(|&r| (r, shell_mass(params, grid, r.max(0.0)) / mass))
            .collect(),
    }
}
