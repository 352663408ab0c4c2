//! General progenitor systems `P w = mu`.
//!
//! Row `i` of `P` belongs to a moment key, column `j` to a reduced particle
//! velocity, and the entry is that velocity's monomial for the key. This
//! module builds `P` for arbitrary layouts, solves square systems, and checks
//! reductions moment by moment. The analytic schemes never call into it; it
//! is the independent check they are verified against.

use serde::Serialize;

use crate::ensemble::{canonical_keys, Ensemble, MomentKey, Velocity};
use crate::error::{Error, Result};

/// Relative pivot threshold for [`ProgenitorSystem::solve_square`].
pub const PIVOT_TOLERANCE: f64 = 1e-12;
/// Below this magnitude an original moment is treated as zero and the
/// discrepancy is reported as absolute.
pub const ZERO_MOMENT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ProgenitorSystem {
    keys: Vec<MomentKey>,
    velocities: Vec<Velocity>,
    matrix: Vec<Vec<f64>>,
}

pub fn build_progenitor(keys: &[MomentKey], velocities: &[Velocity]) -> ProgenitorSystem {
    let matrix = keys
        .iter()
        .map(|k| velocities.iter().map(|&v| k.monomial(v)).collect())
        .collect();
    ProgenitorSystem {
        keys: keys.to_vec(),
        velocities: velocities.to_vec(),
        matrix,
    }
}

impl ProgenitorSystem {
    pub fn rows(&self) -> usize {
        self.keys.len()
    }

    pub fn cols(&self) -> usize {
        self.velocities.len()
    }

    pub fn keys(&self) -> &[MomentKey] {
        &self.keys
    }

    pub fn velocities(&self) -> &[Velocity] {
        &self.velocities
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row][col]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// `P w`.
    pub fn apply(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                actual: weights.len(),
            });
        }
        Ok(self
            .matrix
            .iter()
            .map(|row| row.iter().zip(weights).map(|(p, w)| p * w).sum())
            .collect())
    }

    /// Solves `P w = mu` by Gaussian elimination with partial pivoting.
    ///
    /// A pivot smaller than `1e-12` times its row's largest original entry is
    /// a singular system: for the block layouts this means two reduced
    /// particles share a speed on the same axis, or a required velocity
    /// component is zero.
    pub fn solve_square(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows();
        if self.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.cols(),
            });
        }
        if mu.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: mu.len(),
            });
        }
        let mut a = self.matrix.clone();
        let mut b = mu.to_vec();
        let mut row_scale: Vec<f64> = a
            .iter()
            .map(|r| r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .collect();

        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap_or(col);
            if !(a[pivot][col].abs() > PIVOT_TOLERANCE * row_scale[pivot]) {
                return Err(Error::SingularSystem { column: col });
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            row_scale.swap(col, pivot);
            for row in col + 1..n {
                let factor = a[row][col] / a[col][col];
                if factor == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }

        let mut w = vec![0.0; n];
        for row in (0..n).rev() {
            let tail: f64 = (row + 1..n).map(|k| a[row][k] * w[k]).sum();
            w[row] = (b[row] - tail) / a[row][row];
        }

        let residual = self
            .apply(&w)?
            .iter()
            .zip(mu)
            .fold(0.0f64, |m, (r, t)| m.max((r - t).abs()));
        let mu_norm = mu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(residual <= (1e-10 * mu_norm).max(1e-12)) {
            return Err(Error::SingularSystem { column: n });
        }
        Ok(w)
    }
}

/// Free-function form of [`ProgenitorSystem::solve_square`].
pub fn solve_square(system: &ProgenitorSystem, mu: &[f64]) -> Result<Vec<f64>> {
    system.solve_square(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentDiscrepancy {
    pub key: MomentKey,
    pub original: f64,
    pub reduced: f64,
    pub absolute: f64,
    /// `(reduced - original) / |original|`, or the absolute error when the
    /// original moment is below [`ZERO_MOMENT`].
    pub relative: f64,
    pub relative_is_absolute: bool,
}

impl MomentDiscrepancy {
    pub fn new(key: MomentKey, original: f64, reduced: f64) -> Self {
        let delta = reduced - original;
        let zero = original.abs() < ZERO_MOMENT;
        Self {
            key,
            original,
            reduced,
            absolute: delta.abs(),
            relative: if zero { delta.abs() } else { delta / original.abs() },
            relative_is_absolute: zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub entries: Vec<MomentDiscrepancy>,
}

impl ReductionCheck {
    pub fn max_relative(&self) -> f64 {
        self.entries
            .iter()
            .filter(|d| !d.relative_is_absolute)
            .fold(0.0, |m, d| m.max(d.relative.abs()))
    }

    /// Largest absolute error among zero-target moments.
    pub fn max_zero_target(&self) -> f64 {
        self.entries
            .iter()
            .filter(|d| d.relative_is_absolute)
            .fold(0.0, |m, d| m.max(d.absolute))
    }

    /// Largest entry of the relative column (absolute for zero targets).
    pub fn worst(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, d| m.max(d.relative.abs()))
    }

    pub fn get(&self, key: MomentKey) -> Option<&MomentDiscrepancy> {
        self.entries.iter().find(|d| d.key == key)
    }

    /// True when nonzero targets match to `relative` and zero targets to `absolute`.
    pub fn within(&self, relative: f64, absolute: f64) -> bool {
        self.max_relative() < relative && self.max_zero_target() < absolute
    }
}

/// Per-moment comparison of `reduced` against `original` for every key of
/// order `<= order`.
pub fn verify_reduction(original: &Ensemble, reduced: &Ensemble, order: u32) -> Result<ReductionCheck> {
    if order > 3 {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(verify_keys(original, reduced, &canonical_keys(order)))
}

/// Same as [`verify_reduction`] for an explicit key list.
pub fn verify_keys(original: &Ensemble, reduced: &Ensemble, keys: &[MomentKey]) -> ReductionCheck {
    ReductionCheck {
        entries: keys
            .iter()
            .map(|&k| MomentDiscrepancy::new(k, original.moment(k), reduced.moment(k)))
            .collect(),
    }
}
