use thiserror::Error;

use crate::ensemble::MomentKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid particle: {0}")]
    InvalidParticle(String),

    #[error("moment order {0} is not supported here")]
    UnsupportedOrder(u32),

    #[error("velocity dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(u32),

    #[error("ensemble has no mass")]
    EmptyEnsemble,

    #[error("degenerate covariance: eigenvalue {eigenvalue:e} at or below threshold {threshold:e}")]
    DegenerateCovariance { eigenvalue: f64, threshold: f64 },

    #[error("singular progenitor system (pivot failure at column {column})")]
    SingularSystem { column: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("moment vector is not standardized: {key} = {value} (expected {expected})")]
    NotStandardized {
        key: MomentKey,
        value: f64,
        expected: f64,
    },

    #[error("speed {speed} is below the feasibility bound {minimum}")]
    SpeedTooSmall { speed: f64, minimum: f64 },

    #[error("negative weight {weight:e} in {block}")]
    NegativeWeight { weight: f64, block: &'static str },

    #[error("no feasible speed at or below {limit:e}")]
    NoFeasibleSpeed { limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
