//! Moment-preserving particle reduction for the Stochastic Weighted Particle
//! Method.
//!
//! A group of weighted velocity samples is replaced by a much smaller group
//! whose moments up to order three match the original exactly. The reduction
//! works in a standardized frame (unit mass, zero drift, identity covariance)
//! where the reduced velocities can be placed so that every weight is
//! nonnegative and given in closed form.
//!
//! The crate also carries the experiment harness used to study how well
//! non-preserved moments and tail functionals survive reduction: analytic
//! test distributions with quadrature oracles, DSMC-like and SWPM-like
//! samplers, rectangular-box grouping, and seeded ensemble statistics.

pub mod distributions;
pub mod ensemble;
pub mod error;
pub mod grouping;
pub mod harness;
pub mod io;
pub mod progenitor;
pub mod reduction;
pub mod standardization;

pub use ensemble::{n_moments, Ensemble, MomentKey, MomentVector, Velocity, WeightedParticle};
pub use error::{Error, Result};
pub use reduction::{reduce, Scheme, SchemeConfig, SpeedPolicy};
pub use standardization::{destandardize, standardize, StandardizationTransform};
