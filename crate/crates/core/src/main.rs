use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use swpm_reduce::distributions::{sample, DistParams, Sampler};
use swpm_reduce::grouping::{reduce_grouped, GroupingConfig, GroupingReport};
use swpm_reduce::harness::{self, default_group_size, ExperimentConfig};
use swpm_reduce::io::{read_particles_file, write_particles_file};
use swpm_reduce::reduction::ReductionReport;
use swpm_reduce::{reduce, Ensemble, Scheme, SchemeConfig, SpeedPolicy};

#[derive(Parser)]
#[command(name = "swpm-reduce", version, about = "Moment-preserving particle reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Dsmc,
    Swpm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grouping {
    None,
    Rectbox,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    harness::triple(s).map_err(|e| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: swpm_reduce::Error| e.to_string())
}

fn parse_speed(s: &str) -> Result<SpeedPolicy, String> {
    harness::speed(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Draw a test ensemble and write it as a particle file.
    Sample {
        #[arg(long, default_value = "0,0,0", value_parser = parse_triple, allow_hyphen_values = true)]
        alpha: [f64; 3],
        #[arg(long, default_value = "0,0,0", value_parser = parse_triple)]
        beta: [f64; 3],
        #[arg(long, default_value_t = 7.0)]
        vr: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "swpm")]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Moments and tail functionals of a particle file (CSV `quantity,value`).
    Moments {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_order: u32,
        #[arg(long, default_value = "1,2,3,4,5,6", value_delimiter = ',')]
        tails: Vec<f64>,
        /// Standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a particle file.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_scheme, default_value = "k3")]
        scheme: Scheme,
        #[arg(long, value_enum, default_value = "none")]
        grouping: Grouping,
        /// Target group size (default: smallest reducible size for the scheme).
        #[arg(long)]
        ngroup: Option<usize>,
        #[arg(long, default_value_t = 7.0)]
        vr: f64,
        #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
        delta: f64,
        #[arg(long, default_value_t = 3f64.sqrt())]
        gamma: f64,
        #[arg(long, default_value = "0.5,0.5,0.5", value_parser = parse_triple)]
        l: [f64; 3],
        /// `min` or a fixed speed in the standardized frame.
        #[arg(long, default_value = "min", value_parser = parse_speed)]
        speed: SpeedPolicy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run an ensemble experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
#[serde(untagged)]
enum Diagnostics {
    Single(ReductionReport),
    Grouped(GroupingReport),
}

#[derive(Serialize)]
struct ReduceReport {
    config: SchemeConfig,
    input_count: usize,
    output_count: usize,
    diagnostics: Diagnostics,
}

fn moments_csv(e: &Ensemble, max_order: u32, tails: &[f64], mut w: impl Write) -> Result<()> {
    writeln!(w, "quantity,value")?;
    for key in e.moments_for(max_order).keys() {
        writeln!(w, "{key},{:e}", e.moment(key))?;
    }
    for &r in tails {
        writeln!(w, "Tail({r}),{:e}", e.tail_functional(r))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sample {
            alpha,
            beta,
            vr,
            n,
            mode,
            seed,
            out,
        } => {
            let params = DistParams { alpha, beta, v_r: vr };
            params.validate()?;
            let sampler = match mode {
                Mode::Dsmc => Sampler::Dsmc,
                Mode::Swpm => Sampler::Swpm,
            };
            let e = sample(sampler, &params, n, seed);
            write_particles_file(&out, &e).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Moments {
            input,
            max_order,
            tails,
            out,
        } => {
            let e = read_particles_file(&input).with_context(|| format!("reading {}", input.display()))?;
            match out {
                Some(path) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
                    moments_csv(&e, max_order, &tails, &mut f)?;
                    f.flush()?;
                }
                None => moments_csv(&e, max_order, &tails, std::io::stdout().lock())?,
            }
        }
        Command::Reduce {
            input,
            scheme,
            grouping,
            ngroup,
            vr,
            delta,
            gamma,
            l,
            speed,
            seed,
            out,
            report,
        } => {
            let e = read_particles_file(&input).with_context(|| format!("reading {}", input.display()))?;
            let config = SchemeConfig {
                scheme,
                delta,
                gamma,
                l,
                speed,
            };
            config.validate()?;
            let (reduced, diagnostics) = match grouping {
                Grouping::None => {
                    let r = reduce(&e, &config);
                    (r.ensemble, Diagnostics::Single(r.report))
                }
                Grouping::Rectbox => {
                    let g = GroupingConfig {
                        v_r: vr,
                        n_group: ngroup.unwrap_or_else(|| default_group_size(scheme)),
                        scheme: config,
                        seed,
                    };
                    let (r, rep) = reduce_grouped(&e, &g)?;
                    (r, Diagnostics::Grouped(rep))
                }
            };
            write_particles_file(&out, &reduced).with_context(|| format!("writing {}", out.display()))?;
            let summary = ReduceReport {
                config,
                input_count: e.len(),
                output_count: reduced.len(),
                diagnostics,
            };
            if let Some(path) = report {
                let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
                serde_json::to_writer_pretty(&mut f, &summary)?;
                f.write_all(b"\n")?;
                f.flush()?;
            } else {
                eprintln!("reduced {} -> {} particles", summary.input_count, summary.output_count);
            }
        }
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::from_file(&config).with_context(|| format!("reading {}", config.display()))?;
            let rows = harness::run_to_dir(&cfg, &out)?;
            eprintln!("wrote {} summary rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
}

