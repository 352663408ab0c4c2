//! Equal-volume rectangular boxes over the cube around the simulation ball.
//!
//! Roughly `(6/pi) * N_orig / N_group` boxes are laid out so that the boxes
//! intersecting the ball hold about `N_group` particles each. Each box is
//! reduced independently; undersized or degenerate boxes pass through.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{Ensemble, Velocity, WeightedParticle};
use crate::error::{Error, Result};
use crate::reduction::{reduce, ReductionReport, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxGrid {
    pub v_r: f64,
    /// Boxes per axis.
    pub counts: [usize; 3],
    pub sides: [f64; 3],
}

impl BoxGrid {
    pub fn new(v_r: f64, counts: [usize; 3]) -> Self {
        let counts = counts.map(|c| c.max(1));
        Self {
            v_r,
            counts,
            sides: counts.map(|c| 2.0 * v_r / c as f64),
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().product()
    }

    /// Flat box index `ix + nx*(iy + ny*iz)` and whether the velocity had to
    /// be clamped into the cube.
    pub fn locate(&self, v: Velocity) -> (usize, bool) {
        let mut idx = [0usize; 3];
        let mut clamped = false;
        for axis in 0..3 {
            let n = self.counts[axis];
            let t = ((v[axis] + self.v_r) / self.sides[axis]).floor();
            let i = if t < 0.0 {
                clamped = true;
                0
            } else if t >= n as f64 {
                // the upper face of the last box is closed
                if v[axis] > self.v_r {
                    clamped = true;
                }
                n - 1
            } else {
                t as usize
            };
            idx[axis] = i;
        }
        (idx[0] + self.counts[0] * (idx[1] + self.counts[1] * idx[2]), clamped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupingConfig {
    pub v_r: f64,
    /// Target particles per group.
    pub n_group: usize,
    pub scheme: SchemeConfig,
    /// Seed for the random choice of the axis that absorbs the remainder.
    pub seed: u64,
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_r.is_finite() && self.v_r > 0.0) {
            return Err(Error::Config(format!("v_R must be positive (got {})", self.v_r)));
        }
        if self.n_group < 2 {
            return Err(Error::Config(format!("N_group must be at least 2 (got {})", self.n_group)));
        }
        self.scheme.validate()
    }
}

/// Box counts per axis for `n_orig` particles: two randomly chosen axes get
/// `floor(n^(1/3))`, the third gets what is left of `n_groups`.
pub fn plan_boxes(n_orig: usize, config: &GroupingConfig) -> BoxGrid {
    let n_groups = 6.0 / std::f64::consts::PI * n_orig as f64 / config.n_group as f64;
    let side = (n_groups.cbrt().floor() as usize).max(1);
    let last = ((n_groups / (side * side) as f64).floor() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let odd_axis = rng.random_range(0..3);
    let mut counts = [side; 3];
    counts[odd_axis] = last;
    BoxGrid::new(config.v_r, counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Groups {
    /// Occupied boxes in increasing box index.
    pub groups: Vec<(usize, Ensemble)>,
    /// Particles outside the ball, assigned to the nearest boundary box.
    pub out_of_ball: usize,
}

pub fn group_particles(ensemble: &Ensemble, grid: &BoxGrid) -> Groups {
    let mut boxes: BTreeMap<usize, Vec<WeightedParticle>> = BTreeMap::new();
    let mut out_of_ball = 0;
    for p in ensemble {
        let (idx, _) = grid.locate(p.velocity);
        if p.speed() > grid.v_r {
            out_of_ball += 1;
        }
        boxes.entry(idx).or_default().push(*p);
    }
    Groups {
        groups: boxes.into_iter().map(|(i, ps)| (i, Ensemble::new(ps))).collect(),
        out_of_ball,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupingReport {
    pub grid: BoxGrid,
    pub boxes_total: usize,
    pub boxes_occupied: usize,
    pub groups_reduced: usize,
    pub groups_passed_through: usize,
    pub min_group_size: usize,
    pub max_group_size: usize,
    pub out_of_ball: usize,
    pub input_count: usize,
    pub output_count: usize,
    /// Worst per-group preserved-moment discrepancy.
    pub max_discrepancy: f64,
    pub groups: Vec<ReductionReport>,
}

/// Groups `ensemble` into boxes and reduces each box; output is concatenated
/// in box order, so it does not depend on thread scheduling.
pub fn reduce_grouped(ensemble: &Ensemble, config: &GroupingConfig) -> Result<(Ensemble, GroupingReport)> {
    config.validate()?;
    let grid = plan_boxes(ensemble.len(), config);
    let grouped = group_particles(ensemble, &grid);
    let results: Vec<_> = grouped
        .groups
        .par_iter()
        .map(|(_, g)| reduce(g, &config.scheme))
        .collect();

    let sizes = grouped.groups.iter().map(|(_, g)| g.len());
    let mut out = Vec::with_capacity(ensemble.len());
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        out.extend(r.ensemble.into_particles());
        reports.push(r.report);
    }
    let reduced = reports.iter().filter(|r| !r.pass_through).count();
    let report = GroupingReport {
        grid,
        boxes_total: grid.total(),
        boxes_occupied: grouped.groups.len(),
        groups_reduced: reduced,
        groups_passed_through: reports.len() - reduced,
        min_group_size: sizes.clone().min().unwrap_or(0),
        max_group_size: sizes.max().unwrap_or(0),
        out_of_ball: grouped.out_of_ball,
        input_count: ensemble.len(),
        output_count: out.len(),
        max_discrepancy: reports.iter().fold(0.0, |m, r| m.max(r.max_discrepancy)),
        groups: reports,
    };
    Ok((Ensemble::new(out), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progenitor::verify_reduction;
    use crate::reduction::Scheme;

    fn config(n_group: usize, scheme: Scheme, seed: u64) -> GroupingConfig {
        GroupingConfig {
            v_r: 7.0,
            n_group,
            scheme: SchemeConfig::new(scheme),
            seed,
        }
    }

    fn uniform_ball(n: usize, seed: u64) -> Ensemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let v = [(); 3].map(|_| rng.random_range(-7.0..7.0));
            let r2: f64 = v.iter().map(|x| x * x).sum();
            if r2 <= 49.0 {
                out.push(WeightedParticle {
                    velocity: v,
                    weight: (-0.5 * r2).exp() + 1e-3,
                });
            }
        }
        Ensemble::new(out)
    }

    #[test]
    fn plan_for_thousand_particles() {
        let grid = plan_boxes(1000, &config(11, Scheme::K2, 4));
        let mut counts = grid.counts;
        counts.sort();
        assert_eq!(counts, [5, 5, 6]);
        assert_eq!(grid.total(), 150);
    }

    #[test]
    fn plan_for_single_group() {
        let grid = plan_boxes(11, &config(11, Scheme::K2, 0));
        assert_eq!(grid.counts, [1, 1, 1]);
    }

    #[test]
    fn plan_depends_only_on_seed() {
        let a = plan_boxes(1000, &config(11, Scheme::K2, 9));
        let b = plan_boxes(1000, &config(11, Scheme::K2, 9));
        assert_eq!(a.counts, b.counts);
        let placements: std::collections::HashSet<_> =
            (0..40).map(|s| plan_boxes(1000, &config(11, Scheme::K2, s)).counts).collect();
        assert_eq!(placements.len(), 3);
    }

    #[test]
    fn closed_last_box() {
        let grid = BoxGrid::new(7.0, [5, 5, 6]);
        assert_eq!(grid.locate([7.0, 7.0, 7.0]), (grid.total() - 1, false));
        assert_eq!(grid.locate([-7.0, -7.0, -7.0]), (0, false));
        assert_eq!(grid.locate([9.0, 0.0, 0.0]).1, true);
        // half-open interior boundary: 2*7/5 - 7 = -4.2 starts box 1
        assert_eq!(grid.locate([-4.2, -7.0, -7.0]).0, 1);
    }

    #[test]
    fn single_box_is_whole_ensemble() {
        let e = uniform_ball(100, 1);
        let g = group_particles(&e, &BoxGrid::new(7.0, [1, 1, 1]));
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].1, e);
    }

    #[test]
    fn partition_conserves_mass() {
        let e = uniform_ball(2000, 2);
        let grid = plan_boxes(e.len(), &config(11, Scheme::K2, 3));
        let g = group_particles(&e, &grid);
        let n: usize = g.groups.iter().map(|(_, x)| x.len()).sum();
        assert_eq!(n, e.len());
        let mass: f64 = g.groups.iter().map(|(_, x)| x.total_weight()).sum();
        assert!((mass - e.total_weight()).abs() < 1e-12 * e.total_weight());
        assert_eq!(g.out_of_ball, 0);
    }

    #[test]
    fn grouped_k2_preserves_global_second_order() {
        let e = uniform_ball(10_000, 5);
        let (out, report) = reduce_grouped(&e, &config(11, Scheme::K2, 5)).unwrap();
        let check = verify_reduction(&e, &out, 2).unwrap();
        assert!(check.max_relative() < 1e-9, "{}", check.max_relative());
        let ratio = out.len() as f64 / e.len() as f64;
        assert!((0.55..0.8).contains(&ratio), "{ratio}");
        assert_eq!(report.output_count, out.len());
        assert!(report.groups_reduced > 0);
    }

    #[test]
    fn grouped_k1_halves() {
        let e = uniform_ball(1000, 8);
        let (out, report) = reduce_grouped(&e, &config(2, Scheme::K1, 8)).unwrap();
        assert!(out.len() < e.len());
        assert_eq!(
            out.len(),
            report.groups_reduced + report.groups.iter().filter(|r| r.pass_through).map(|r| r.input_count).sum::<usize>()
        );
        let check = verify_reduction(&e, &out, 1).unwrap();
        assert!(check.max_relative() < 1e-12);
    }

    #[test]
    fn grouping_is_deterministic() {
        let e = uniform_ball(3000, 6);
        let cfg = config(39, Scheme::K3, 6);
        let a = reduce_grouped(&e, &cfg).unwrap().0;
        let b = reduce_grouped(&e, &cfg).unwrap().0;
        assert_eq!(a, b);
    }
}
