//! Affine map between the lab frame and the standardized frame in which an
//! ensemble has unit mass, zero drift and identity covariance.
//!
//! The standardized velocity is `S^-1 R^T (v - mean)` with `R` the principal
//! axes of the central covariance and `S` the per-axis standard deviations;
//! weights are divided by the total mass.

use serde::Serialize;

use crate::ensemble::{pairwise_sum, Ensemble, Velocity, WeightedParticle};
use crate::error::{Error, Result};

pub type Matrix3 = [[f64; 3]; 3];

const JACOBI_MAX_SWEEPS: usize = 32;
const JACOBI_TOLERANCE: f64 = 1e-14;
/// Relative eigenvalue floor below which a covariance counts as degenerate.
pub const DEGENERATE_RELATIVE: f64 = 1e-10;

const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Eigen-decomposition of a symmetric 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: [f64; 3],
    /// Column `i` is the eigenvector of `values[i]`; right-handed.
    pub vectors: Matrix3,
}

fn transpose(m: &Matrix3) -> Matrix3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

fn matmul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn determinant(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn frobenius(m: &Matrix3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cyclic Jacobi rotations. The input is symmetrized first.
pub fn symmetric_eig3(m: &Matrix3) -> SymmetricEigen {
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    let scale = frobenius(&a);
    let mut v = IDENTITY;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = (2.0 * (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2))).sqrt();
        if off <= JACOBI_TOLERANCE * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = IDENTITY;
            rot[p][p] = c;
            rot[q][q] = c;
            rot[p][q] = s;
            rot[q][p] = -s;
            a = matmul(&transpose(&rot), &matmul(&a, &rot));
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            v = matmul(&v, &rot);
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (col, &src) in order.iter().enumerate() {
        values[col] = a[src][src];
        for row in 0..3 {
            vectors[row][col] = v[row][src];
        }
    }
    if determinant(&vectors) < 0.0 {
        for row in vectors.iter_mut() {
            row[2] = -row[2];
        }
    }
    SymmetricEigen { values, vectors }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandardizationTransform {
    /// Original `M000`.
    pub mass: f64,
    /// Original drift velocity.
    pub mean: Velocity,
    /// Orthogonal, columns are the principal axes.
    pub rotation: Matrix3,
    pub scales: [f64; 3],
}

impl StandardizationTransform {
    pub fn identity() -> Self {
        Self {
            mass: 1.0,
            mean: [0.0; 3],
            rotation: IDENTITY,
            scales: [1.0; 3],
        }
    }

    /// Shift-and-normalize only: unit mass and zero drift, no rotation or
    /// scaling. Enough for schemes that preserve nothing above first order,
    /// and defined for any ensemble with positive mass.
    pub fn translation(ensemble: &Ensemble) -> Result<Self> {
        let mass = ensemble.total_weight();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Self {
            mass,
            mean: drift(ensemble, mass),
            rotation: IDENTITY,
            scales: [1.0; 3],
        })
    }

    pub fn to_standard(&self, v: Velocity) -> Velocity {
        let d = [v[0] - self.mean[0], v[1] - self.mean[1], v[2] - self.mean[2]];
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let projected: f64 = (0..3).map(|k| self.rotation[k][i] * d[k]).sum();
            *o = projected / self.scales[i];
        }
        out
    }

    pub fn to_lab(&self, v: Velocity) -> Velocity {
        let scaled = [v[0] * self.scales[0], v[1] * self.scales[1], v[2] * self.scales[2]];
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|k| self.rotation[i][k] * scaled[k]).sum::<f64>() + self.mean[i];
        }
        out
    }

    /// Maps a lab-frame ensemble into this transform's standardized frame.
    pub fn apply(&self, ensemble: &Ensemble) -> Ensemble {
        ensemble
            .iter()
            .map(|p| WeightedParticle {
                velocity: self.to_standard(p.velocity),
                weight: p.weight / self.mass,
            })
            .collect()
    }
}

fn drift(ensemble: &Ensemble, mass: f64) -> Velocity {
    let mut mean = [0.0; 3];
    for (axis, m) in mean.iter_mut().enumerate() {
        let terms: Vec<f64> = ensemble.iter().map(|p| p.weight * p.velocity[axis]).collect();
        *m = pairwise_sum(&terms) / mass;
    }
    mean
}

/// Central covariance normalized by the total mass.
pub fn covariance(ensemble: &Ensemble) -> Result<(f64, Velocity, Matrix3)> {
    let mass = ensemble.total_weight();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::EmptyEnsemble);
    }
    let mean = drift(ensemble, mass);
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let terms: Vec<f64> = ensemble
                .iter()
                .map(|p| p.weight * (p.velocity[i] - mean[i]) * (p.velocity[j] - mean[j]))
                .collect();
            let c = pairwise_sum(&terms) / mass;
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok((mass, mean, cov))
}

/// Maps `ensemble` to its standardized frame.
///
/// Fails with [`Error::DegenerateCovariance`] when the smallest covariance
/// eigenvalue is at or below `1e-10` times the largest; such groups cannot be
/// reduced and should be passed through unchanged.
pub fn standardize(ensemble: &Ensemble) -> Result<(Ensemble, StandardizationTransform)> {
    let (mass, mean, cov) = covariance(ensemble)?;
    let eig = symmetric_eig3(&cov);
    let threshold = DEGENERATE_RELATIVE * eig.values[0].max(1e-300);
    if !(eig.values[2] > threshold) {
        return Err(Error::DegenerateCovariance {
            eigenvalue: eig.values[2],
            threshold,
        });
    }
    let transform = StandardizationTransform {
        mass,
        mean,
        rotation: eig.vectors,
        scales: eig.values.map(f64::sqrt),
    };
    Ok((transform.apply(ensemble), transform))
}

/// Inverse of [`standardize`]: `v = R S v_std + mean`, `w = mass * w_std`.
pub fn destandardize(ensemble: &Ensemble, transform: &StandardizationTransform) -> Ensemble {
    ensemble
        .iter()
        .map(|p| WeightedParticle {
            velocity: transform.to_lab(p.velocity),
            weight: p.weight * transform.mass,
        })
        .collect()
}
