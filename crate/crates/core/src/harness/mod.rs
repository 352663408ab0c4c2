//! Seeded ensemble experiments: sample, optionally reduce, and collect
//! statistics of moments and tail functionals before and after reduction.

mod config;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{reference_table, sample, ReferenceTable};
use crate::ensemble::{Ensemble, MomentKey};
use crate::error::Result;
use crate::grouping::{reduce_grouped, GroupingConfig};
use crate::progenitor::ZERO_MOMENT;
use crate::reduction::reduce;

pub use config::{default_group_size, integer, list, number, speed, triple, ExperimentConfig, DEFAULT_SWEEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pre,
    Post,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Pre => "pre",
            Stage::Post => "post",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Quantity {
    Moment(MomentKey),
    Tail(f64),
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::Moment(k) => write!(f, "{k}"),
            Quantity::Tail(r) => write!(f, "Tail({r})"),
        }
    }
}

impl Quantity {
    pub fn evaluate(&self, e: &Ensemble) -> f64 {
        match *self {
            Quantity::Moment(k) => e.moment(k),
            Quantity::Tail(r) => e.tail_functional(r),
        }
    }
}

/// Ensemble statistics of one quantity at one stage.
///
/// Pre-stage errors compare each sample against the quadrature reference;
/// post-stage errors compare each reduced ensemble against the ensemble it
/// was reduced from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatRecord {
    pub scheme: String,
    pub quantity: String,
    pub n_orig: usize,
    pub stage: Stage,
    /// Mean particle count at this stage.
    pub particles: f64,
    pub mean: f64,
    /// Sample standard deviation over ensembles.
    pub std: f64,
    pub reference: f64,
    pub e_abs_mean: f64,
    /// Mean of `(value - baseline) / |baseline|`.
    pub e_rel_mean: f64,
    /// Mean of `|value - baseline| / |baseline|`.
    pub e_rel_abs_mean: f64,
    /// Set when some baseline was below `1e-14`; the relative columns then
    /// hold absolute errors for those ensembles.
    pub rel_is_abs: bool,
}

/// Per-ensemble seed from the master seed, sample size and index
/// (SplitMix64 finalizer applied to each input in turn).
pub fn ensemble_seed(master: u64, n_orig: usize, index: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ n_orig as u64) ^ index as u64)
}

struct Outcome {
    pre: Vec<f64>,
    post: Option<Vec<f64>>,
    pre_count: usize,
    post_count: usize,
}

fn run_ensemble(config: &ExperimentConfig, quantities: &[Quantity], n: usize, index: usize) -> Result<Outcome> {
    let seed = ensemble_seed(config.seed, n, index);
    let e = sample(config.sampler, &config.dist, n, seed);
    let pre: Vec<f64> = quantities.iter().map(|q| q.evaluate(&e)).collect();
    let reduced = match (&config.scheme, config.n_group) {
        (None, _) => None,
        (Some(s), None) => Some(reduce(&e, s).ensemble),
        (Some(s), Some(n_group)) => {
            let g = GroupingConfig {
                v_r: config.dist.v_r,
                n_group,
                scheme: *s,
                seed,
            };
            Some(reduce_grouped(&e, &g)?.0)
        }
    };
    Ok(Outcome {
        pre,
        post: reduced.as_ref().map(|r| quantities.iter().map(|q| q.evaluate(r)).collect()),
        pre_count: e.len(),
        post_count: reduced.as_ref().map_or(0, Ensemble::len),
    })
}

fn mean(xs: &[f64]) -> f64 {
    crate::ensemble::pairwise_sum(xs) / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    (crate::ensemble::pairwise_sum(&dev) / (xs.len() as f64 - 1.0)).sqrt()
}

struct Errors {
    abs: f64,
    rel: f64,
    rel_abs: f64,
    rel_is_abs: bool,
}

fn errors(values: &[f64], baselines: &[f64]) -> Errors {
    let mut abs = Vec::with_capacity(values.len());
    let mut rel = Vec::with_capacity(values.len());
    let mut rel_is_abs = false;
    for (&v, &b) in values.iter().zip(baselines) {
        let d = v - b;
        abs.push(d.abs());
        if b.abs() < ZERO_MOMENT {
            rel_is_abs = true;
            rel.push(d.abs());
        } else {
            rel.push(d / b.abs());
        }
    }
    let rel_abs: Vec<f64> = rel.iter().map(|r| r.abs()).collect();
    Errors {
        abs: mean(&abs),
        rel: mean(&rel),
        rel_abs: mean(&rel_abs),
        rel_is_abs,
    }
}

pub fn tracked_quantities(config: &ExperimentConfig) -> Vec<Quantity> {
    config
        .moments
        .iter()
        .map(|&k| Quantity::Moment(k))
        .chain(config.tails.iter().map(|&r| Quantity::Tail(r)))
        .collect()
}

pub fn reference_for(config: &ExperimentConfig) -> ReferenceTable {
    let max_order = config.moments.iter().map(MomentKey::order).max().unwrap_or(0);
    reference_table(&config.dist, max_order, &config.tails, &config.quadrature)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<StatRecord>> {
    config.validate()?;
    let reference = reference_for(config);
    run_with_reference(config, &reference)
}

/// [`run_experiment`] with a precomputed reference table.
pub fn run_with_reference(config: &ExperimentConfig, reference: &ReferenceTable) -> Result<Vec<StatRecord>> {
    config.validate()?;
    let quantities = tracked_quantities(config);
    let refs: Vec<f64> = quantities
        .iter()
        .map(|q| match *q {
            Quantity::Moment(k) => reference.moment(k).unwrap_or(f64::NAN),
            Quantity::Tail(r) => reference.tail(r).unwrap_or(f64::NAN),
        })
        .collect();
    let scheme_name = config.scheme.map_or("none".to_string(), |s| s.scheme.name().to_string());

    let mut records = Vec::new();
    for &n in &config.n_orig {
        let outcomes: Vec<Outcome> = (0..config.n_ensembles)
            .into_par_iter()
            .map(|i| run_ensemble(config, &quantities, n, i))
            .collect::<Result<_>>()?;
        let pre_count = mean(&outcomes.iter().map(|o| o.pre_count as f64).collect::<Vec<_>>());
        let post_count = mean(&outcomes.iter().map(|o| o.post_count as f64).collect::<Vec<_>>());

        for (qi, q) in quantities.iter().enumerate() {
            let pre: Vec<f64> = outcomes.iter().map(|o| o.pre[qi]).collect();
            let e = errors(&pre, &vec![refs[qi]; pre.len()]);
            records.push(StatRecord {
                scheme: scheme_name.clone(),
                quantity: q.to_string(),
                n_orig: n,
                stage: Stage::Pre,
                particles: pre_count,
                mean: mean(&pre),
                std: sample_std(&pre),
                reference: refs[qi],
                e_abs_mean: e.abs,
                e_rel_mean: e.rel,
                e_rel_abs_mean: e.rel_abs,
                rel_is_abs: e.rel_is_abs,
            });
            if outcomes[0].post.is_some() {
                let post: Vec<f64> = outcomes
                    .iter()
                    .map(|o| o.post.as_ref().map_or(f64::NAN, |p| p[qi]))
                    .collect();
                let e = errors(&post, &pre);
                records.push(StatRecord {
                    scheme: scheme_name.clone(),
                    quantity: q.to_string(),
                    n_orig: n,
                    stage: Stage::Post,
                    particles: post_count,
                    mean: mean(&post),
                    std: sample_std(&post),
                    reference: refs[qi],
                    e_abs_mean: e.abs,
                    e_rel_mean: e.rel,
                    e_rel_abs_mean: e.rel_abs,
                    rel_is_abs: e.rel_is_abs,
                });
            }
        }
    }
    Ok(records)
}

/// One row per `(scheme, N_orig, quantity)`, with pre- and post-reduction
/// statistics side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub n_orig: usize,
    pub quantity: String,
    pub reference: f64,
    pub pre_mean: f64,
    pub pre_std: f64,
    pub post_mean: Option<f64>,
    pub post_std: Option<f64>,
    pub e_abs_mean: Option<f64>,
    pub e_rel_mean: Option<f64>,
    pub e_rel_abs_mean: Option<f64>,
    pub rel_is_abs: bool,
}

pub fn summarize_errors(records: &[StatRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in records {
        let pos = rows
            .iter()
            .position(|x| x.scheme == r.scheme && x.n_orig == r.n_orig && x.quantity == r.quantity);
        let row = match pos {
            Some(i) => &mut rows[i],
            None => {
                rows.push(SummaryRow {
                    scheme: r.scheme.clone(),
                    n_orig: r.n_orig,
                    quantity: r.quantity.clone(),
                    reference: r.reference,
                    pre_mean: f64::NAN,
                    pre_std: f64::NAN,
                    post_mean: None,
                    post_std: None,
                    e_abs_mean: None,
                    e_rel_mean: None,
                    e_rel_abs_mean: None,
                    rel_is_abs: false,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        match r.stage {
            Stage::Pre => {
                row.pre_mean = r.mean;
                row.pre_std = r.std;
            }
            Stage::Post => {
                row.post_mean = Some(r.mean);
                row.post_std = Some(r.std);
                row.e_abs_mean = Some(r.e_abs_mean);
                row.e_rel_mean = Some(r.e_rel_mean);
                row.e_rel_abs_mean = Some(r.e_rel_abs_mean);
                row.rel_is_abs = r.rel_is_abs;
            }
        }
    }
    rows
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_records_csv<W: Write>(w: W, records: &[StatRecord]) -> Result<()> {
    let mut out = csv_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    config: &'a ExperimentConfig,
    reference: &'a ReferenceTable,
    summary: &'a [SummaryRow],
}

/// Runs `config` and writes `records.csv`, `summary.csv` and `report.json`
/// into `dir`.
pub fn run_to_dir(config: &ExperimentConfig, dir: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let reference = reference_for(config);
    let records = run_with_reference(config, &reference)?;
    let summary = summarize_errors(&records);
    write_records_csv(std::fs::File::create(dir.join("records.csv"))?, &records)?;
    write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?, &summary)?;
    let report = Report {
        config,
        reference: &reference,
        summary: &summary,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(summary)
}
