//! Weighted particles, ensembles and their velocity moments.
//!
//! Velocities are in thermal-velocity units. A moment `M_{kx,ky,kz}` is the
//! weighted sum of `vx^kx * vy^ky * vz^kz` with `0^0 = 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Velocity = [f64; 3];

/// Block size below which [`pairwise_sum`] falls back to a plain loop.
const PAIRWISE_BLOCK: usize = 32;

/// Sum with pairwise (tree) accumulation. Error grows like `log2(n) * eps`
/// instead of `n * eps`, which keeps sums stable under permutation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedParticle {
    pub velocity: Velocity,
    pub weight: f64,
}

impl WeightedParticle {
    /// Checked constructor: finite velocity, finite nonnegative weight.
    pub fn new(velocity: Velocity, weight: f64) -> Result<Self> {
        if !velocity.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParticle(format!(
                "non-finite velocity {velocity:?}"
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidParticle(format!(
                "weight must be finite and nonnegative, got {weight}"
            )));
        }
        Ok(Self { velocity, weight })
    }

    pub fn speed(&self) -> f64 {
        let [x, y, z] = self.velocity;
        (x * x + y * y + z * z).sqrt()
    }
}

/// Ordered collection of weighted particles. Zero-weight particles are
/// dropped on construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ensemble {
    particles: Vec<WeightedParticle>,
}

impl Ensemble {
    pub fn new(particles: Vec<WeightedParticle>) -> Self {
        let mut particles = particles;
        particles.retain(|p| p.weight != 0.0);
        Self { particles }
    }

    /// Builds an ensemble from raw velocity/weight pairs, validating each.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Velocity, f64)>,
    {
        let particles = pairs
            .into_iter()
            .map(|(v, w)| WeightedParticle::new(v, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(particles))
    }

    pub fn particles(&self) -> &[WeightedParticle] {
        &self.particles
    }

    pub fn into_particles(self) -> Vec<WeightedParticle> {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, WeightedParticle> {
        self.particles.iter()
    }

    pub fn extend(&mut self, other: Ensemble) {
        self.particles.extend(other.particles);
    }

    /// `M000`.
    pub fn total_weight(&self) -> f64 {
        self.moment(MomentKey::ZERO)
    }

    pub fn moment(&self, key: MomentKey) -> f64 {
        let terms: Vec<f64> = self
            .particles
            .iter()
            .map(|p| p.weight * key.monomial(p.velocity))
            .collect();
        pairwise_sum(&terms)
    }

    /// All moments of order `<= order` in canonical block order.
    pub fn moment_vector(&self, order: u32) -> Result<MomentVector> {
        if order > 3 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(self.moments_for(order))
    }

    /// Like [`Ensemble::moment_vector`] without the order cap; used by the
    /// harness for the non-preserved order-4 and order-5 moments.
    pub fn moments_for(&self, order: u32) -> MomentVector {
        let entries = canonical_keys(order)
            .into_iter()
            .map(|k| (k, self.moment(k)))
            .collect();
        MomentVector { order, entries }
    }

    /// Total weight of particles with `|v| >= radius`.
    pub fn tail_functional(&self, radius: f64) -> f64 {
        let terms: Vec<f64> = self
            .particles
            .iter()
            .filter(|p| p.speed() >= radius)
            .map(|p| p.weight)
            .collect();
        pairwise_sum(&terms)
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.particles
                .iter()
                .map(|p| WeightedParticle {
                    velocity: p.velocity,
                    weight: p.weight * factor,
                })
                .collect(),
        )
    }
}

impl FromIterator<WeightedParticle> for Ensemble {
    fn from_iter<T: IntoIterator<Item = WeightedParticle>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Ensemble {
    type Item = &'a WeightedParticle;
    type IntoIter = std::slice::Iter<'a, WeightedParticle>;

    fn into_iter(self) -> Self::IntoIter {
        self.particles.iter()
    }
}

/// Exponent triple identifying the moment `M_{kx,ky,kz}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentKey {
    pub kx: u32,
    pub ky: u32,
    pub kz: u32,
}

impl MomentKey {
    pub const ZERO: MomentKey = MomentKey::new(0, 0, 0);

    pub const fn new(kx: u32, ky: u32, kz: u32) -> Self {
        Self { kx, ky, kz }
    }

    pub const fn order(&self) -> u32 {
        self.kx + self.ky + self.kz
    }

    pub fn exponents(&self) -> [u32; 3] {
        [self.kx, self.ky, self.kz]
    }

    /// `vx^kx * vy^ky * vz^kz`; `powi(0)` already yields 1 for a zero base.
    pub fn monomial(&self, v: Velocity) -> f64 {
        v[0].powi(self.kx as i32) * v[1].powi(self.ky as i32) * v[2].powi(self.kz as i32)
    }

    /// Pure moment of `order` along `axis`, e.g. `(0, 3)` is `M300`.
    pub fn pure(axis: usize, order: u32) -> Self {
        let mut e = [0; 3];
        e[axis] = order;
        Self::new(e[0], e[1], e[2])
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kx < 10 && self.ky < 10 && self.kz < 10 {
            write!(f, "M{}{}{}", self.kx, self.ky, self.kz)
        } else {
            write!(f, "M{}_{}_{}", self.kx, self.ky, self.kz)
        }
    }
}

impl FromStr for MomentKey {
    type Err = Error;

    /// Accepts `M400`, `400` or `M12_0_1`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim();
        let body = body.strip_prefix(['M', 'm']).unwrap_or(body);
        let bad = || Error::Parse(format!("invalid moment key `{s}`"));
        let parts: Vec<u32> = if body.contains('_') {
            body.split('_')
                .map(|p| p.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            body.chars()
                .map(|c| c.to_digit(10).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        match parts.as_slice() {
            [kx, ky, kz] => Ok(Self::new(*kx, *ky, *kz)),
            _ => Err(bad()),
        }
    }
}

/// Number of moments of order `<= order` in `dim` velocity dimensions.
pub fn n_moments(order: u32, dim: u32) -> Result<usize> {
    let k = order as usize;
    match dim {
        2 => Ok(1 + 2 * k + k * k.saturating_sub(1) / 2),
        3 => Ok(1
            + 3 * k
            + 3 * k * k.saturating_sub(1) / 2
            + k * k.saturating_sub(1) * k.saturating_sub(2) / 6),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// Moment keys of order `<= order` in block order: `M000`; the pure x, y and
/// z moments by increasing order; the xy, xz and yz mixed blocks (grouped by
/// the first exponent, then the second); finally the triple-mixed moments in
/// lexicographic order.
pub fn canonical_keys(order: u32) -> Vec<MomentKey> {
    let k = order;
    let mut keys = vec![MomentKey::ZERO];
    for axis in 0..3 {
        keys.extend((1..=k).map(|n| MomentKey::pure(axis, n)));
    }
    for (first, second) in [(0, 1), (0, 2), (1, 2)] {
        for a in 1..k {
            for b in 1..=(k - a) {
                let mut e = [0; 3];
                e[first] = a;
                e[second] = b;
                keys.push(MomentKey::new(e[0], e[1], e[2]));
            }
        }
    }
    for kx in 1..=k {
        for ky in 1..=k {
            for kz in 1..=k {
                if kx + ky + kz <= k {
                    keys.push(MomentKey::new(kx, ky, kz));
                }
            }
        }
    }
    keys
}

/// Moments of order `<= order` in canonical block order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    order: u32,
    entries: Vec<(MomentKey, f64)>,
}

impl MomentVector {
    /// Builds a vector from values given in canonical order.
    pub fn from_values(order: u32, values: &[f64]) -> Result<Self> {
        let keys = canonical_keys(order);
        if keys.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: keys.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            order,
            entries: keys.into_iter().zip(values.iter().copied()).collect(),
        })
    }

    /// All-zero vector of the given order.
    pub fn zeros(order: u32) -> Self {
        Self {
            order,
            entries: canonical_keys(order).into_iter().map(|k| (k, 0.0)).collect(),
        }
    }

    /// Moments of a standardized distribution with no higher structure:
    /// unit mass, zero drift, identity covariance, zero third moments.
    pub fn standard(order: u32) -> Self {
        let mut mu = Self::zeros(order);
        mu.set(MomentKey::ZERO, 1.0);
        if order >= 2 {
            for axis in 0..3 {
                mu.set(MomentKey::pure(axis, 2), 1.0);
            }
        }
        mu
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(MomentKey, f64)] {
        &self.entries
    }

    pub fn keys(&self) -> Vec<MomentKey> {
        self.entries.iter().map(|(k, _)| *k).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    pub fn get(&self, key: MomentKey) -> Option<f64> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    /// Value of `key`, or zero when the key lies above this vector's order.
    pub fn value(&self, key: MomentKey) -> f64 {
        self.get(key).unwrap_or(0.0)
    }

    /// Overwrites an existing entry; keys above the vector's order are ignored.
    pub fn set(&mut self, key: MomentKey, value: f64) {
        if let Some(entry) = self.entries.iter_mut().find(|(k, _)| *k == key) {
            entry.1 = value;
        }
    }

    /// Same moments re-expressed at a (usually higher) order; new entries are zero.
    pub fn with_order(&self, order: u32) -> Self {
        let mut out = Self::zeros(order);
        for (k, v) in &self.entries {
            out.set(*k, *v);
        }
        out
    }
}
