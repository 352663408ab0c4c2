//! Positive-weight moment-preserving reduction.
//!
//! Every scheme works in the standardized frame (unit mass, zero drift,
//! identity covariance) where the weight system splits into small blocks
//! with closed-form solutions:
//!
//! * `K1`   one particle at the mean
//! * `K2`   center plus six axis particles at `±s`
//! * `K2.5` `K2` plus a third particle per axis carrying the pure skewness
//! * `K3`   `K2.5` plus twins for the mixed moments of each coordinate plane
//!   and a quadruplet for `M111`

mod blocks;
mod params;

use serde::Serialize;

use crate::ensemble::{pairwise_sum, Ensemble, MomentKey, MomentVector, WeightedParticle};
use crate::error::{Error, Result};
use crate::progenitor::{verify_keys, verify_reduction, ZERO_MOMENT};
use crate::standardization::{destandardize, standardize, StandardizationTransform};

pub use blocks::{solve_quadruplet, solve_twins, Axis, AxisPair};
pub use params::{choose_beta, compute_backsub_params, AxisParams, BacksubParams};

/// Tolerance for accepting a moment vector as standardized.
pub const STANDARDIZED_TOLERANCE: f64 = 1e-8;

/// Smallest speed for which the second-order solution is nonnegative.
pub const SQRT3: f64 = 1.732_050_807_568_877_2;

const SPEED_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    K1,
    K2,
    #[serde(rename = "K2.5")]
    K2_5,
    K3,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::K1, Scheme::K2, Scheme::K2_5, Scheme::K3];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::K1 => "K1",
            Scheme::K2 => "K2",
            Scheme::K2_5 => "K2.5",
            Scheme::K3 => "K3",
        }
    }

    /// Maximum number of particles produced per group.
    pub fn output_size(self) -> usize {
        match self {
            Scheme::K1 => 1,
            Scheme::K2 => 7,
            Scheme::K2_5 => 10,
            Scheme::K3 => 26,
        }
    }

    /// Highest order whose every lab-frame moment is preserved.
    pub fn preserved_order(self) -> u32 {
        match self {
            Scheme::K1 => 1,
            Scheme::K2 | Scheme::K2_5 => 2,
            Scheme::K3 => 3,
        }
    }

    /// Moments preserved in the standardized frame of the group.
    pub fn standardized_keys(self) -> Vec<MomentKey> {
        let mut keys = crate::ensemble::canonical_keys(self.preserved_order());
        if self == Scheme::K2_5 {
            keys.extend((0..3).map(|axis| MomentKey::pure(axis, 3)));
        }
        keys
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "k1" => Ok(Scheme::K1),
            "k2" => Ok(Scheme::K2),
            "k2.5" | "k25" | "k2_5" => Ok(Scheme::K2_5),
            "k3" => Ok(Scheme::K3),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpeedPolicy {
    Fixed(f64),
    /// Smallest feasible speed, bracketed to this absolute tolerance.
    Minimal(f64),
}

impl Default for SpeedPolicy {
    fn default() -> Self {
        SpeedPolicy::Minimal(1e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Twin scaling: `s_twin = s / delta`.
    pub delta: f64,
    /// Quadruplet scaling: `s_quad = s / gamma`.
    pub gamma: f64,
    /// Third-particle speed ratio per axis.
    pub l: [f64; 3],
    pub speed: SpeedPolicy,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::K3,
            delta: std::f64::consts::SQRT_2,
            gamma: SQRT3,
            l: [0.5; 3],
            speed: SpeedPolicy::default(),
        }
    }
}

impl SchemeConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn with_speed(mut self, speed: SpeedPolicy) -> Self {
        self.speed = speed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.delta) || !positive(self.gamma) {
            return Err(Error::Config(format!(
                "delta and gamma must be positive and finite (got {}, {})",
                self.delta, self.gamma
            )));
        }
        if self.l.iter().any(|&l| !positive(l) || l == 1.0) {
            return Err(Error::Config(format!("l must be positive and != 1 (got {:?})", self.l)));
        }
        match self.speed {
            SpeedPolicy::Fixed(s) if !positive(s) => {
                Err(Error::Config(format!("speed must be positive (got {s})")))
            }
            SpeedPolicy::Minimal(tol) if !positive(tol) => {
                Err(Error::Config(format!("speed tolerance must be positive (got {tol})")))
            }
            _ => Ok(()),
        }
    }
}

/// Checks that `mu` is in the standardized frame and returns a copy at
/// `order` with drift and off-diagonal covariance set to exactly zero and
/// third moments below the pruning threshold dropped.
fn prepare_standardized(mu: &MomentVector, order: u32) -> Result<MomentVector> {
    if mu.order() < order {
        return Err(Error::UnsupportedOrder(mu.order()));
    }
    let mut out = mu.with_order(order);
    let fixed = [
        (MomentKey::new(1, 0, 0), 0.0),
        (MomentKey::new(0, 1, 0), 0.0),
        (MomentKey::new(0, 0, 1), 0.0),
        (MomentKey::new(1, 1, 0), 0.0),
        (MomentKey::new(1, 0, 1), 0.0),
        (MomentKey::new(0, 1, 1), 0.0),
        (MomentKey::new(0, 0, 0), 1.0),
        (MomentKey::new(2, 0, 0), 1.0),
        (MomentKey::new(0, 2, 0), 1.0),
        (MomentKey::new(0, 0, 2), 1.0),
    ];
    for (key, expected) in fixed {
        if key.order() > order {
            continue;
        }
        let value = mu.value(key);
        if !((value - expected).abs() <= STANDARDIZED_TOLERANCE) {
            return Err(Error::NotStandardized { key, value, expected });
        }
        if expected == 0.0 {
            out.set(key, 0.0);
        }
    }
    for &(key, value) in mu.entries() {
        if key.order() == 3 && value.abs() < ZERO_MOMENT {
            out.set(key, 0.0);
        }
    }
    Ok(out)
}

fn zero_mixed_third(mu: &mut MomentVector) {
    let keys: Vec<MomentKey> = mu
        .keys()
        .into_iter()
        .filter(|k| k.order() == 3 && k.exponents().iter().all(|&e| e < 3))
        .collect();
    for key in keys {
        mu.set(key, 0.0);
    }
}

fn keep(out: &mut Vec<WeightedParticle>, velocity: [f64; 3], weight: f64, block: &'static str) -> Result<()> {
    if weight < -ZERO_MOMENT {
        return Err(Error::NegativeWeight { weight, block });
    }
    if weight > ZERO_MOMENT {
        out.push(WeightedParticle { velocity, weight });
    }
    Ok(())
}

/// One particle at the origin in a drift-free frame; otherwise up to four:
/// one per nonzero first moment at `4 M_i / M000` along its axis with weight
/// `M000 / 4`, and the remaining mass at the origin.
pub fn solve_k1(mu: &MomentVector) -> Result<Ensemble> {
    let m0 = mu.value(MomentKey::ZERO);
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::EmptyEnsemble);
    }
    let mut out = Vec::new();
    let mut used = 0.0;
    for axis in 0..3 {
        let m = mu.value(MomentKey::pure(axis, 1));
        if m.abs() < ZERO_MOMENT {
            continue;
        }
        let mut v = [0.0; 3];
        v[axis] = 4.0 * m / m0;
        out.push(WeightedParticle {
            velocity: v,
            weight: m0 / 4.0,
        });
        used += m0 / 4.0;
    }
    let w0 = m0 - used;
    if w0 > 0.0 {
        out.insert(
            0,
            WeightedParticle {
                velocity: [0.0; 3],
                weight: w0,
            },
        );
    }
    Ok(Ensemble::new(out))
}

/// Two or three particles on `axis` carrying the modified pure moments.
pub fn solve_axis_block(
    axis: Axis,
    params: &AxisParams,
    beta: f64,
    l: f64,
    s: f64,
) -> Result<Vec<WeightedParticle>> {
    let s3 = s.powi(3);
    let place = |c: f64| {
        let mut v = [0.0; 3];
        v[axis.index()] = c;
        v
    };
    let w1 = (params.a * s - params.b - params.c_plus) / (2.0 * s3);
    let w2 = (params.a * s - params.b - params.c_minus) / (2.0 * s3);
    let w3 = beta * params.third / ((l * l - 1.0) * l * s3);
    let block = match axis {
        Axis::X => "axis x",
        Axis::Y => "axis y",
        Axis::Z => "axis z",
    };
    let mut out = Vec::with_capacity(3);
    keep(&mut out, place(beta * s), w1, block)?;
    keep(&mut out, place(-beta * s), w2, block)?;
    keep(&mut out, place(beta * l * s), w3, block)?;
    Ok(out)
}

/// Shared third-order assembly on an already prepared moment vector.
fn assemble(mu: &MomentVector, config: &SchemeConfig, s: f64) -> Result<Ensemble> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::SpeedTooSmall {
            speed: s,
            minimum: SQRT3,
        });
    }
    let beta = choose_beta(mu, config, s);
    let params = compute_backsub_params(mu, config, beta, s);

    let mut others = solve_quadruplet(mu.value(MomentKey::new(1, 1, 1)), s / config.gamma);
    for pair in AxisPair::ALL {
        let m = pair.moment_keys().map(|k| mu.value(k));
        // the mixed second moments are zero in this frame
        others.extend(solve_twins(pair, [0.0, m[1], m[2]], s / config.delta));
    }
    let mut axes = Vec::with_capacity(9);
    for axis in Axis::ALL {
        let i = axis.index();
        axes.extend(solve_axis_block(axis, params.axis(axis), beta[i], config.l[i], s)?);
    }
    axes.extend(others);

    let weights: Vec<f64> = axes.iter().map(|p| p.weight).collect();
    let w0 = mu.value(MomentKey::ZERO) - pairwise_sum(&weights);
    let mut out = Vec::with_capacity(axes.len() + 1);
    keep(&mut out, [0.0; 3], w0, "center")?;
    out.extend(axes);
    Ok(Ensemble::new(out))
}

/// Center plus six axis particles; requires `s >= sqrt(3)`.
pub fn solve_k2(mu: &MomentVector, s: f64) -> Result<Ensemble> {
    if s < SQRT3 {
        return Err(Error::SpeedTooSmall {
            speed: s,
            minimum: SQRT3,
        });
    }
    let mu = prepare_standardized(mu, 2)?.with_order(3);
    assemble(&mu, &SchemeConfig::new(Scheme::K2), s).map_err(|e| match e {
        Error::NegativeWeight { .. } => Error::SpeedTooSmall {
            speed: s,
            minimum: SQRT3,
        },
        e => e,
    })
}

/// Axis blocks only: preserves order two and the pure third moments.
pub fn solve_k2_5(mu: &MomentVector, config: &SchemeConfig, s: f64) -> Result<Ensemble> {
    let mut mu = prepare_standardized(mu, 3)?;
    zero_mixed_third(&mut mu);
    assemble(&mu, config, s)
}

/// Full third-order scheme: at most 26 particles.
pub fn solve_k3(mu: &MomentVector, config: &SchemeConfig, s: f64) -> Result<Ensemble> {
    let mu = prepare_standardized(mu, 3)?;
    assemble(&mu, config, s)
}

/// Solver for `config.scheme` at speed `s` (ignored by `K1`).
pub fn solve(mu: &MomentVector, config: &SchemeConfig, s: f64) -> Result<Ensemble> {
    match config.scheme {
        Scheme::K1 => solve_k1(mu),
        Scheme::K2 => solve_k2(mu, s),
        Scheme::K2_5 => solve_k2_5(mu, config, s),
        Scheme::K3 => solve_k3(mu, config, s),
    }
}

/// Smallest speed at which every weight of the scheme is nonnegative.
///
/// Starts from the explicit two-particle conditions `s >= (b + c±)/a`, then
/// scans geometrically for the center weight and bisects; the returned speed
/// is always on the feasible side of the bracket.
pub fn select_min_speed(mu: &MomentVector, config: &SchemeConfig) -> Result<f64> {
    let tolerance = match config.speed {
        SpeedPolicy::Minimal(tol) => tol,
        SpeedPolicy::Fixed(_) => 1e-6,
    };
    let prepared = match config.scheme {
        Scheme::K1 => return Ok(0.0),
        Scheme::K2 => {
            prepare_standardized(mu, 2)?;
            return Ok(SQRT3);
        }
        Scheme::K2_5 => {
            let mut m = prepare_standardized(mu, 3)?;
            zero_mixed_third(&mut m);
            m
        }
        Scheme::K3 => prepare_standardized(mu, 3)?,
    };
    let feasible = |s: f64| assemble(&prepared, config, s).is_ok();

    let beta = choose_beta(&prepared, config, SQRT3);
    let params = compute_backsub_params(&prepared, config, beta, SQRT3);
    let mut lower = SQRT3;
    for p in params.axes {
        if !(p.a > 0.0) {
            return Err(Error::NoFeasibleSpeed { limit: SPEED_LIMIT });
        }
        lower = lower.max((p.b + p.c_plus) / p.a).max((p.b + p.c_minus) / p.a);
    }
    if feasible(lower) {
        return Ok(lower);
    }
    let mut lo = lower;
    let mut hi = lower * 1.1;
    while !feasible(hi) {
        if hi > SPEED_LIMIT {
            return Err(Error::NoFeasibleSpeed { limit: SPEED_LIMIT });
        }
        lo = hi;
        hi *= 1.1;
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Per-group diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub scheme: Scheme,
    pub input_count: usize,
    pub output_count: usize,
    /// Speed used in the standardized frame; `None` for pass-through and `K1`.
    pub speed: Option<f64>,
    pub pass_through: bool,
    pub reason: Option<String>,
    /// Worst relative discrepancy over the lab-frame preserved moments
    /// (absolute for zero targets).
    pub max_discrepancy: f64,
    /// Same check in the standardized frame of the group, which for `K2.5`
    /// also covers the pure third moments.
    pub max_standardized_discrepancy: f64,
    /// Closed-form center weight minus the mass-balance one (third-order
    /// schemes only).
    pub center_weight_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub ensemble: Ensemble,
    pub report: ReductionReport,
}

fn pass_through(ensemble: &Ensemble, scheme: Scheme, reason: String) -> Reduction {
    Reduction {
        ensemble: ensemble.clone(),
        report: ReductionReport {
            scheme,
            input_count: ensemble.len(),
            output_count: ensemble.len(),
            speed: None,
            pass_through: true,
            reason: Some(reason),
            max_discrepancy: 0.0,
            max_standardized_discrepancy: 0.0,
            center_weight_gap: None,
        },
    }
}

/// Standardize, solve, map back. Never fails: groups that cannot be reduced
/// are returned unchanged with the reason in the report.
pub fn reduce(ensemble: &Ensemble, config: &SchemeConfig) -> Reduction {
    let scheme = config.scheme;
    if let Err(e) = config.validate() {
        return pass_through(ensemble, scheme, e.to_string());
    }
    if ensemble.len() <= scheme.output_size() {
        return pass_through(
            ensemble,
            scheme,
            format!("group of {} is not larger than the {} output size", ensemble.len(), scheme),
        );
    }
    match reduce_inner(ensemble, config) {
        Ok(r) => r,
        Err(e) => pass_through(ensemble, scheme, e.to_string()),
    }
}

fn reduce_inner(ensemble: &Ensemble, config: &SchemeConfig) -> Result<Reduction> {
    let scheme = config.scheme;
    let (standard, transform) = if scheme == Scheme::K1 {
        let t = StandardizationTransform::translation(ensemble)?;
        (t.apply(ensemble), t)
    } else {
        standardize(ensemble)?
    };

    let (reduced_std, speed, gap) = match scheme {
        Scheme::K1 => {
            // drift is zero by construction of the frame
            let mut mu = MomentVector::zeros(1);
            mu.set(MomentKey::ZERO, standard.total_weight());
            (solve_k1(&mu)?, None, None)
        }
        _ => {
            let mu = standard.moment_vector(3)?;
            let s = match config.speed {
                SpeedPolicy::Minimal(_) => select_min_speed(&mu, config)?,
                SpeedPolicy::Fixed(s) => s,
            };
            let reduced = match solve(&mu, config, s) {
                Err(Error::NegativeWeight { .. }) => {
                    return Err(Error::SpeedTooSmall {
                        speed: s,
                        minimum: select_min_speed(&mu, config)?,
                    })
                }
                r => r?,
            };
            let gap = (scheme != Scheme::K2).then(|| center_weight_gap(&mu, config, s, &reduced));
            (reduced, Some(s), gap)
        }
    };

    let lab = destandardize(&reduced_std, &transform);
    let check = verify_reduction(ensemble, &lab, scheme.preserved_order())?;
    let std_check = verify_keys(&standard, &reduced_std, &scheme.standardized_keys());
    Ok(Reduction {
        report: ReductionReport {
            scheme,
            input_count: ensemble.len(),
            output_count: lab.len(),
            speed,
            pass_through: false,
            reason: None,
            max_discrepancy: check.worst(),
            max_standardized_discrepancy: std_check.worst(),
            center_weight_gap: gap,
        },
        ensemble: lab,
    })
}

fn center_weight_gap(mu: &MomentVector, config: &SchemeConfig, s: f64, reduced: &Ensemble) -> f64 {
    let beta = choose_beta(mu, config, s);
    let closed = compute_backsub_params(mu, config, beta, s).closed_form_center_weight(s);
    let center = reduced
        .iter()
        .find(|p| p.velocity == [0.0; 3])
        .map_or(0.0, |p| p.weight);
    closed - center
}
