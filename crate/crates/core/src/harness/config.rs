//! Experiment configuration and its `key = value` file format.
//!
//! ```text
//! # skewed case, K2 with minimal groups
//! alpha = 0.75, 0, 0
//! beta = 0.02, 0, 0
//! vr = 7
//! n_orig = 100, 1000
//! n_ensembles = 30
//! sampler = swpm
//! scheme = k2
//! grouping = rectbox
//! ngroup = 8
//! moments = M400, M500
//! tails = 1, 2, 3, 4, 5, 6
//! seed = 42
//! ```

use serde::Serialize;

use crate::distributions::{DistParams, QuadratureGrid, Sampler};
use crate::ensemble::MomentKey;
use crate::error::{Error, Result};
use crate::reduction::{Scheme, SchemeConfig, SpeedPolicy};

pub const DEFAULT_SWEEP: [usize; 13] = [
    10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dist: DistParams,
    pub n_orig: Vec<usize>,
    pub n_ensembles: usize,
    pub sampler: Sampler,
    /// `None` records the pre-reduction statistics only.
    pub scheme: Option<SchemeConfig>,
    /// Target group size for rectangular-box grouping; `None` reduces each
    /// ensemble as a single group.
    pub n_group: Option<usize>,
    pub moments: Vec<MomentKey>,
    pub tails: Vec<f64>,
    pub seed: u64,
    pub quadrature: QuadratureGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dist: DistParams::skewed(),
            n_orig: DEFAULT_SWEEP.to_vec(),
            n_ensembles: 100,
            sampler: Sampler::Swpm,
            scheme: None,
            n_group: None,
            moments: ["M100", "M200", "M300", "M400", "M500", "M120", "M111"]
                .iter()
                .map(|s| s.parse().expect("valid key"))
                .collect(),
            tails: (1..=6).map(f64::from).collect(),
            seed: 0,
            quadrature: QuadratureGrid::default(),
        }
    }
}

/// Default group size for a scheme: the smallest that still reduces.
pub fn default_group_size(scheme: Scheme) -> usize {
    match scheme {
        Scheme::K1 => 2,
        Scheme::K2 => 11,
        Scheme::K2_5 => 15,
        Scheme::K3 => 39,
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if self.n_ensembles < 2 {
            return Err(Error::Config(format!(
                "n_ensembles must be at least 2 (got {})",
                self.n_ensembles
            )));
        }
        if self.n_orig.is_empty() || self.n_orig.contains(&0) {
            return Err(Error::Config("n_orig must list positive sizes".into()));
        }
        if self.moments.is_empty() && self.tails.is_empty() {
            return Err(Error::Config("nothing to track: moments and tails are both empty".into()));
        }
        if let Some(r) = self.tails.iter().find(|&&r| !(r >= 0.0 && r <= self.dist.v_r)) {
            return Err(Error::Config(format!("tail radius {r} outside [0, v_R]")));
        }
        if let Some(s) = &self.scheme {
            s.validate()?;
        }
        if let Some(g) = self.n_group {
            if g < 2 {
                return Err(Error::Config(format!("ngroup must be at least 2 (got {g})")));
            }
            if self.scheme.is_none() {
                return Err(Error::Config("grouping requires a scheme".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut scheme: Option<Scheme> = None;
        let mut scheme_params = SchemeConfig::default();
        let mut grouping = false;
        let mut n_group: Option<usize> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: Error| Error::Config(format!("line {} ({key}): {e}", lineno + 1));
            match key {
                "alpha" => cfg.dist.alpha = triple(value).map_err(ctx)?,
                "beta" => cfg.dist.beta = triple(value).map_err(ctx)?,
                "vr" => cfg.dist.v_r = number(value).map_err(ctx)?,
                "n_orig" => cfg.n_orig = list(value, integer).map_err(ctx)?,
                "n_ensembles" => cfg.n_ensembles = integer(value).map_err(ctx)?,
                "sampler" => cfg.sampler = value.parse().map_err(ctx)?,
                "scheme" => {
                    scheme = match value.to_ascii_lowercase().as_str() {
                        "none" => None,
                        _ => Some(value.parse().map_err(ctx)?),
                    }
                }
                "grouping" => {
                    grouping = match value.to_ascii_lowercase().as_str() {
                        "none" => false,
                        "rectbox" => true,
                        other => return Err(ctx(Error::Parse(format!("unknown grouping `{other}`")))),
                    }
                }
                "ngroup" => n_group = Some(integer(value).map_err(ctx)?),
                "delta" => scheme_params.delta = number(value).map_err(ctx)?,
                "gamma" => scheme_params.gamma = number(value).map_err(ctx)?,
                "l" => scheme_params.l = triple(value).map_err(ctx)?,
                "speed" => scheme_params.speed = speed(value).map_err(ctx)?,
                "moments" => {
                    cfg.moments = list(value, |s| s.parse::<MomentKey>()).map_err(ctx)?;
                }
                "tails" => cfg.tails = list(value, number).map_err(ctx)?,
                "seed" => cfg.seed = value.parse().map_err(|e| ctx(Error::Parse(format!("{e}"))))?,
                "quadrature_points" => cfg.quadrature = QuadratureGrid::new(integer(value).map_err(ctx)?),
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }

        cfg.scheme = scheme.map(|s| SchemeConfig {
            scheme: s,
            ..scheme_params
        });
        cfg.n_group = match (grouping, scheme) {
            (true, Some(s)) => Some(n_group.unwrap_or_else(|| default_group_size(s))),
            (true, None) => return Err(Error::Config("grouping = rectbox requires a scheme".into())),
            (false, _) => None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

pub fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("`{}` is not finite", s.trim())));
    }
    Ok(v)
}

pub fn integer(s: &str) -> Result<usize> {
    let t = s.trim();
    if let Ok(v) = t.parse::<usize>() {
        return Ok(v);
    }
    // allow 1e5 style sizes
    let v = number(t)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Parse(format!("`{t}` is not a nonnegative integer")))
    }
}

pub fn list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(item)
        .collect()
}

pub fn triple(s: &str) -> Result<[f64; 3]> {
    let v = list(s, number)?;
    match v.as_slice() {
        [x] => Ok([*x; 3]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(Error::Parse(format!("expected 1 or 3 comma-separated numbers, got `{s}`"))),
    }
}

/// `min` for the minimal feasible speed, otherwise a fixed speed.
pub fn speed(s: &str) -> Result<SpeedPolicy> {
    match s.trim() {
        "min" => Ok(SpeedPolicy::default()),
        other => Ok(SpeedPolicy::Fixed(number(other)?)),
    }
}
