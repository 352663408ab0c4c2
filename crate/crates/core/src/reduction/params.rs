//! Back-substitution parameters for the axis blocks of the third-order scheme.
//!
//! Once quadruplet and twins are placed, each axis is left with a 3x3
//! Vandermonde-type system at velocities `beta*s`, `-beta*s`, `beta*l*s`
//! whose right-hand side is the pure axis moment minus everything the twins
//! and quadruplet already deposited there. The closed-form solution is
//!
//! ```text
//! w1 = (a s - b - c+) / (2 s^3)       at  beta s
//! w2 = (a s - b - c-) / (2 s^3)       at -beta s
//! w3 = beta R / ((l^2 - 1) l s^3)     at  beta l s
//! ```
//!
//! with `R = M3 + (delta^2 - 1) Q - s^2 M1`, `Q` the sum of the two mixed
//! moments linear in this axis and quadratic in another.

use serde::Serialize;

use super::blocks::{unit_sign, Axis};
use super::SchemeConfig;
use crate::ensemble::{MomentKey, MomentVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisParams {
    pub a: f64,
    pub b: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    /// `R`, the numerator of the third-particle weight.
    pub third: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BacksubParams {
    pub axes: [AxisParams; 3],
    pub a0: f64,
    pub b0: f64,
}

impl BacksubParams {
    pub fn axis(&self, axis: Axis) -> &AxisParams {
        &self.axes[axis.index()]
    }

    /// Center weight from the tabulated `(s^3 - a0 s + b0) / (2 s^3)` form.
    ///
    /// Diagnostic only. In the Gaussian limit this gives `(s^3 + 3s)/(2s^3)`,
    /// not `1 - 3/s^2`, so the solver uses the mass balance instead.
    pub fn closed_form_center_weight(&self, s: f64) -> f64 {
        (s.powi(3) - self.a0 * s + self.b0) / (2.0 * s.powi(3))
    }
}

fn key_with(axis: Axis, power: u32, other: Axis, other_power: u32) -> MomentKey {
    let mut e = [0; 3];
    e[axis.index()] = power;
    e[other.index()] = other_power;
    MomentKey::new(e[0], e[1], e[2])
}

/// Moments entering one axis block.
struct AxisMoments {
    m1: f64,
    m2: f64,
    m3: f64,
    /// Sum of `M(e_i + 2 e_j)` over the other axes `j`.
    q: f64,
    /// Sum of `|M(e_i + e_j)|`.
    mixed2: f64,
    /// Sum of `|M(2e_i + e_j)| + |M(e_i + 2e_j)|`.
    mixed3: f64,
}

fn axis_moments(mu: &MomentVector, axis: Axis) -> AxisMoments {
    let i = axis.index();
    let mut out = AxisMoments {
        m1: mu.value(MomentKey::pure(i, 1)),
        m2: mu.value(MomentKey::pure(i, 2)),
        m3: mu.value(MomentKey::pure(i, 3)),
        q: 0.0,
        mixed2: 0.0,
        mixed3: 0.0,
    };
    for other in axis.others() {
        let m12 = mu.value(key_with(axis, 1, other, 2));
        let m21 = mu.value(key_with(axis, 2, other, 1));
        out.q += m12;
        out.mixed2 += mu.value(key_with(axis, 1, other, 1)).abs();
        out.mixed3 += m12.abs() + m21.abs();
    }
    out
}

fn third_numerator(m: &AxisMoments, delta: f64, s: f64) -> f64 {
    m.m3 + (delta * delta - 1.0) * m.q - s * s * m.m1
}

/// Orientation of each axis block: the sign that makes the third weight
/// nonnegative. A vanishing numerator gives `+1`.
pub fn choose_beta(mu: &MomentVector, config: &SchemeConfig, s: f64) -> [f64; 3] {
    Axis::ALL.map(|axis| {
        let m = axis_moments(mu, axis);
        let l = config.l[axis.index()];
        let r = third_numerator(&m, config.delta, s);
        if r == 0.0 {
            1.0
        } else {
            unit_sign(r / ((l * l - 1.0) * l))
        }
    })
}

pub fn compute_backsub_params(
    mu: &MomentVector,
    config: &SchemeConfig,
    beta: [f64; 3],
    s: f64,
) -> BacksubParams {
    let (delta, gamma) = (config.delta, config.gamma);
    let d2 = delta * delta;
    let m111 = mu.value(MomentKey::new(1, 1, 1)).abs();
    let axes = Axis::ALL.map(|axis| {
        let m = axis_moments(mu, axis);
        let l = config.l[axis.index()];
        let bt = beta[axis.index()];
        AxisParams {
            a: m.m2 - m.mixed2,
            b: delta * m.mixed3 + gamma * m111,
            c_plus: bt * ((d2 * l - 1.0) * m.q + m.m3 - l * s * s * m.m1) / (l - 1.0),
            c_minus: bt * (m.m3 - (d2 * l + 1.0) * m.q + l * s * s * m.m1) / (l + 1.0),
            third: third_numerator(&m, delta, s),
        }
    });

    let mixed2: f64 = [(1, 1, 0), (1, 0, 1), (0, 1, 1)]
        .into_iter()
        .map(|(a, b, c)| mu.value(MomentKey::new(a, b, c)).abs())
        .sum();
    let mut b0 = gamma * (3.0 - gamma.powi(3)) * m111;
    let mut mixed3 = 0.0;
    for axis in Axis::ALL {
        let m = axis_moments(mu, axis);
        let scale = beta[axis.index()] / config.l[axis.index()];
        b0 += scale * m.m3 + (d2 - 1.0) * scale * m.q;
        mixed3 += m.mixed3;
    }
    // each mixed third moment appears in two axes' sums
    b0 += delta * (2.0 - d2) * mixed3 / 2.0;

    BacksubParams {
        axes,
        a0: -3.0 + (2.0 - d2) * mixed2,
        b0,
    }
}
