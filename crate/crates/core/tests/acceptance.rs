//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary (`harness = false`) so the lines are
//! always printed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swpm_reduce::distributions::{
    maxwell_speed_tail, reference_moment, reference_tail, sample_swpm_like, DistParams, QuadratureGrid, Sampler,
};
use swpm_reduce::ensemble::canonical_keys;
use swpm_reduce::grouping::{group_particles, plan_boxes, reduce_grouped, GroupingConfig};
use swpm_reduce::harness::{run_experiment, summarize_errors, ExperimentConfig, Stage, StatRecord};
use swpm_reduce::progenitor::{build_progenitor, verify_keys, verify_reduction};
use swpm_reduce::reduction::{select_min_speed, solve, solve_k1, solve_k2, Scheme, SQRT3};
use swpm_reduce::{reduce, standardize, Ensemble, MomentKey, MomentVector, SchemeConfig, WeightedParticle};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn group_size(scheme: Scheme) -> usize {
    swpm_reduce::harness::default_group_size(scheme)
}

/// Pure third moments of `reduced`, seen in the standardized frame of `original`.
fn standardized_pure_thirds(original: &Ensemble, reduced: &Ensemble) -> Option<f64> {
    let (std_orig, t) = standardize(original).ok()?;
    let std_red = t.apply(reduced);
    let keys: Vec<MomentKey> = (0..3).map(|a| MomentKey::pure(a, 3)).collect();
    Some(verify_keys(&std_orig, &std_red, &keys).worst())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let params = DistParams::skewed();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let e = sample_swpm_like(&params, 1000, 1_000 + seed);
        for scheme in Scheme::ALL {
            let cfg = SchemeConfig::new(scheme);
            let order = scheme.preserved_order();

            // whole ensemble as one group
            let r = reduce(&e, &cfg);
            if r.report.pass_through {
                failures.push(format!("{scheme} seed {seed}: pass-through ({:?})", r.report.reason));
                continue;
            }
            let check = verify_reduction(&e, &r.ensemble, order).map_err(|e| e.to_string())?;
            worst = worst.max(check.max_relative());
            if !check.within(1e-9, 1e-11) {
                failures.push(format!("{scheme} seed {seed}: lab {:e}", check.worst()));
            }
            if scheme == Scheme::K2_5 {
                let d = standardized_pure_thirds(&e, &r.ensemble).unwrap_or(f64::INFINITY);
                worst = worst.max(d);
                if !(d < 1e-9) {
                    failures.push(format!("K2.5 seed {seed}: standardized thirds {d:e}"));
                }
            }

            // rectangular grouping
            let g = GroupingConfig {
                v_r: params.v_r,
                n_group: group_size(scheme),
                scheme: cfg,
                seed,
            };
            let (out, _) = reduce_grouped(&e, &g).map_err(|e| e.to_string())?;
            let check = verify_reduction(&e, &out, order).map_err(|e| e.to_string())?;
            worst = worst.max(check.max_relative());
            if !check.within(1e-9, 1e-11) {
                failures.push(format!("{scheme} grouped seed {seed}: lab {:e}", check.worst()));
            }
            if scheme == Scheme::K2_5 && seed < 10 {
                // group by group, against each group's own frame
                let grid = plan_boxes(e.len(), &g);
                let mut concatenated = Vec::new();
                for (_, group) in group_particles(&e, &grid).groups {
                    let red = reduce(&group, &cfg);
                    if !red.report.pass_through {
                        let d = standardized_pure_thirds(&group, &red.ensemble).unwrap_or(f64::INFINITY);
                        worst = worst.max(d);
                        if !(d < 1e-9) {
                            failures.push(format!("K2.5 grouped seed {seed}: group thirds {d:e}"));
                        }
                    }
                    concatenated.extend(red.ensemble.into_particles());
                }
                if Ensemble::new(concatenated) != out {
                    failures.push(format!("K2.5 grouped seed {seed}: concatenation differs"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        failures.push(format!("runtime {elapsed:?} > 10 s"));
    }
    check(
        failures.is_empty(),
        format!("worst relative discrepancy {worst:.2e}, {elapsed:.2?}"),
        failures.join("; "),
    )
}

fn criterion_2() -> Outcome {
    let mu = MomentVector::standard(2);
    let a = solve_k2(&mu, SQRT3).map_err(|e| e.to_string())?;
    let b = solve_k2(&mu, 2.0).map_err(|e| e.to_string())?;
    // sqrt(3)^3 is not exact in binary, so "exactly 1/6" means to a few ulp
    let sixth = a.iter().map(|p| (p.weight - 1.0 / 6.0).abs()).fold(0.0, f64::max);
    let at_sqrt3 = a.len() == 6 && a.iter().all(|p| p.velocity != [0.0; 3]) && sixth <= 4.0 * f64::EPSILON;
    let p = b.particles();
    let at_two = b.len() == 7 && p[0].velocity == [0.0; 3] && p[0].weight == 0.25 && p[1..].iter().all(|q| q.weight == 0.125);
    check(
        at_sqrt3 && at_two,
        format!("s=sqrt3: 6 weights, max |w-1/6| = {sixth:.1e}; s=2: w0=1/4, six 1/8"),
        format!("s=sqrt3 ok={at_sqrt3} (|w-1/6| {sixth:e}, n={}), s=2 ok={at_two}", a.len()),
    )
}

fn criterion_3() -> Outcome {
    let params = DistParams::skewed();
    let mut failures = Vec::new();
    let mut seen = [0usize; 4];
    for seed in 0..20u64 {
        let e = sample_swpm_like(&params, 1000, 3_000 + seed);
        let (std_e, _) = standardize(&e).map_err(|e| e.to_string())?;
        let mu = std_e.moment_vector(3).map_err(|e| e.to_string())?;
        for (i, scheme) in Scheme::ALL.into_iter().enumerate() {
            let cfg = SchemeConfig::new(scheme);
            let count = if scheme == Scheme::K1 {
                solve_k1(&MomentVector::standard(1)).map_err(|e| e.to_string())?.len()
            } else {
                let s_min = select_min_speed(&mu, &cfg).map_err(|e| e.to_string())?;
                let at_min = solve(&mu, &cfg, s_min).map_err(|e| e.to_string())?.len();
                if at_min > scheme.output_size() {
                    failures.push(format!("{scheme}: {at_min} at minimal s"));
                }
                // away from the feasibility boundary no weight vanishes
                solve(&mu, &cfg, 1.25 * s_min).map_err(|e| e.to_string())?.len()
            };
            seen[i] = seen[i].max(count);
            if count != scheme.output_size() {
                failures.push(format!("{scheme} seed {seed}: {count} != {}", scheme.output_size()));
            }
        }
    }
    check(
        failures.is_empty(),
        format!("counts K1/K2/K2.5/K3 = {seen:?}"),
        failures.join("; "),
    )
}

/// Random realizable standardized moments from a random skewed point cloud.
fn random_standardized(rng: &mut ChaCha8Rng) -> MomentVector {
    let n = rng.random_range(40..200);
    let skew = [(); 3].map(|_| rng.random_range(-1.5..1.5));
    let e: Ensemble = (0..n)
        .map(|_| {
            let v = [0, 1, 2].map(|i| {
                let g: f64 = rng.random::<f64>() + rng.random::<f64>() + rng.random::<f64>() - 1.5;
                g + skew[i] * g * g
            });
            WeightedParticle {
                velocity: [v[0] + 0.3 * v[1], v[1] - 0.2 * v[2], v[2] + 0.1 * v[0]],
                weight: rng.random_range(0.1..2.0),
            }
        })
        .collect();
    standardize(&e).expect("nondegenerate").0.moment_vector(3).expect("order 3")
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let keys = canonical_keys(3);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for trial in 0..100 {
        let mu = random_standardized(&mut rng);
        let cfg = SchemeConfig::default();
        let s = select_min_speed(&mu, &cfg).map_err(|e| e.to_string())? * rng.random_range(1.0..1.5);
        let reduced = solve(&mu, &cfg, s).map_err(|e| e.to_string())?;
        let velocities: Vec<_> = reduced.iter().map(|p| p.velocity).collect();
        let weights: Vec<f64> = reduced.iter().map(|p| p.weight).collect();
        let system = build_progenitor(&keys, &velocities);
        let image = system.apply(&weights).map_err(|e| e.to_string())?;
        let residual = keys
            .iter()
            .zip(&image)
            .map(|(&k, &v)| (v - mu.value(k)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(residual);
        if !(residual < 1e-10) {
            failures.push(format!("trial {trial}: residual {residual:e}"));
        }
    }
    check(
        failures.is_empty(),
        format!("max residual {worst:.2e} over 100 vectors"),
        failures.join("; "),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    let mut failures = Vec::new();
    for trial in 0..100 {
        let mu = random_standardized(&mut rng);
        let cfg = SchemeConfig::default();
        let s = select_min_speed(&mu, &cfg).map_err(|e| e.to_string())?;
        if solve(&mu, &cfg, s).is_err() {
            failures.push(format!("trial {trial}: s* = {s} infeasible"));
        }
        if s > SQRT3 + 1e-4 {
            tested += 1;
            if solve(&mu, &cfg, s * (1.0 - 1e-4)).is_ok() {
                failures.push(format!("trial {trial}: s*(1-1e-4) still feasible (s* = {s})"));
            }
        }
    }
    check(
        failures.is_empty() && tested > 50,
        format!("{tested}/100 groups above sqrt3 bracketed"),
        format!("{} (bracket-tested {tested})", failures.join("; ")),
    )
}

fn post_pre<'a>(records: &'a [StatRecord], quantity: &str) -> (Option<&'a StatRecord>, Option<&'a StatRecord>) {
    let find = |stage| records.iter().find(|r| r.quantity == quantity && r.stage == stage);
    (find(Stage::Pre), find(Stage::Post))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        n_orig: vec![1000],
        n_ensembles: 30,
        sampler: Sampler::Swpm,
        scheme: Some(SchemeConfig::new(Scheme::K1)),
        n_group: Some(2),
        moments: vec![],
        tails: (1..=6).map(f64::from).collect(),
        seed: 6,
        quadrature: QuadratureGrid::new(64),
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    let mut ok = true;
    for r in 1..=6 {
        let name = format!("Tail({r})");
        let (Some(pre), Some(post)) = post_pre(&records, &name) else {
            return Err(format!("missing {name}"));
        };
        let z = (post.mean - pre.mean).abs() / pre.std;
        ok &= z <= 3.0;
        detail.push(format!("{name} {z:.2}sd"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    let msg = format!("{}, {elapsed:.2?}", detail.join(", "));
    check(ok, msg.clone(), msg)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        dist: DistParams {
            v_r: 5.0,
            ..DistParams::skewed()
        },
        n_orig: vec![2000],
        n_ensembles: 30,
        sampler: Sampler::Swpm,
        scheme: Some(SchemeConfig::new(Scheme::K2)),
        n_group: Some(8),
        moments: vec![MomentKey::new(4, 0, 0), MomentKey::new(5, 0, 0)],
        tails: vec![],
        seed: 7,
        quadrature: QuadratureGrid::new(64),
        ..ExperimentConfig::default()
    };
    let rows = summarize_errors(&run_experiment(&cfg).map_err(|e| e.to_string())?);
    let mut ok = true;
    let mut detail = Vec::new();
    for row in &rows {
        let e = row.e_rel_abs_mean.unwrap_or(f64::INFINITY);
        ok &= e < 0.10 && !row.rel_is_abs;
        detail.push(format!("{} mean|E_rel| {:.2}%", row.quantity, 100.0 * e));
    }
    let elapsed = start.elapsed();
    ok &= rows.len() == 2 && elapsed < Duration::from_secs(60);
    let msg = format!("{}, {elapsed:.2?}", detail.join(", "));
    check(ok, msg.clone(), msg)
}

fn criterion_8() -> Outcome {
    let params = DistParams::skewed();
    let key = MomentKey::new(4, 0, 0);
    let mut err = [0.0; 2];
    let n_ens = 10;
    for seed in 0..n_ens {
        let e = sample_swpm_like(&params, 10_000, 8_000 + seed);
        let m = e.moment(key);
        for (i, l) in [0.5, 1.0001].into_iter().enumerate() {
            let cfg = SchemeConfig {
                l: [l; 3],
                ..SchemeConfig::default()
            };
            let r = reduce(&e, &cfg);
            if r.report.pass_through {
                return Err(format!("l={l}: pass-through {:?}", r.report.reason));
            }
            err[i] += ((r.ensemble.moment(key) - m) / m.abs()).abs() / n_ens as f64;
        }
    }
    let ratio = err[1] / err[0];
    let msg = format!("mean |E_rel| M400: l=0.5 {:.3e}, l=1.0001 {:.3e}, ratio {ratio:.1}", err[0], err[1]);
    check(ratio > 10.0, msg.clone(), msg)
}

fn criterion_9() -> Outcome {
    let cv = |sampler| -> Result<f64, String> {
        let cfg = ExperimentConfig {
            n_orig: vec![1000],
            n_ensembles: 30,
            sampler,
            scheme: None,
            moments: vec![],
            tails: vec![6.0],
            seed: 9,
            quadrature: QuadratureGrid::new(32),
            ..ExperimentConfig::default()
        };
        let recs = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let r = &recs[0];
        // all-zero estimates: the spread relative to a zero mean is unbounded
        Ok(if r.mean == 0.0 { f64::INFINITY } else { r.std / r.mean })
    };
    let swpm = cv(Sampler::Swpm)?;
    let dsmc = cv(Sampler::Dsmc)?;
    let msg = format!("CV Tail(6): swpm {swpm:.3}, dsmc {dsmc:.3}");
    check(swpm.is_finite() && dsmc >= 10.0 * swpm, msg.clone(), msg)
}

fn criterion_10() -> Outcome {
    let g = QuadratureGrid::default();
    let p = DistParams::default();
    let mut worst = 0.0f64;
    for r in 1..=5 {
        let r = f64::from(r);
        worst = worst.max((reference_tail(&p, r, &g) - maxwell_speed_tail(r)).abs());
    }
    let m200 = reference_moment(&p, MomentKey::new(2, 0, 0), &g);
    let msg = format!("max tail error {worst:.2e}, M200 - 1 = {:.2e}", m200 - 1.0);
    check(worst < 1e-5 && (m200 - 1.0).abs() < 1e-5, msg.clone(), msg)
}

fn run_cli(dir: &Path, config: &Path, threads: usize) -> Result<(Vec<u8>, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_swpm-reduce"))
        .args(["experiment", "--config"])
        .arg(config)
        .arg("--out")
        .arg(dir)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("experiment exited with {status}"));
    }
    let read = |f: &str| std::fs::read(dir.join(f)).map_err(|e| e.to_string());
    Ok((read("records.csv")?, read("summary.csv")?))
}

fn criterion_11() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("exp.cfg");
    std::fs::write(
        &config,
        "alpha = 0.75, 0, 0\nbeta = 0.02, 0, 0\nn_orig = 100, 500\nn_ensembles = 6\n\
         sampler = swpm\nscheme = k3\ngrouping = rectbox\nmoments = M200, M400, M111\n\
         tails = 2, 5\nseed = 11\nquadrature_points = 32\n",
    )
    .map_err(|e| e.to_string())?;
    let runs = [(1, "a"), (1, "b"), (4, "c")]
        .into_iter()
        .map(|(threads, name)| run_cli(&tmp.path().join(name), &config, threads))
        .collect::<Result<Vec<_>, _>>()?;
    let same = runs.windows(2).all(|w| w[0] == w[1]) && !runs[0].0.is_empty();
    check(
        same,
        format!("records.csv and summary.csv identical over 3 runs ({} bytes)", runs[0].0.len()),
        "outputs differ between runs".into(),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact preservation, 50 ensembles, all schemes, +/- grouping", criterion_1),
        ("K2 closed form at s = sqrt3 and s = 2", criterion_2),
        ("reduced counts 1/7/10/26", criterion_3),
        ("progenitor oracle residual < 1e-10", criterion_4),
        ("minimal-speed bracketing", criterion_5),
        ("K1 grouping keeps Tail(1..6) within 3 sd", criterion_6),
        ("K2 minimal groups: M400, M500 mean |E_rel| < 10%", criterion_7),
        ("l-sensitivity of M400 under K3", criterion_8),
        ("SWPM vs DSMC coefficient of variation of Tail(6)", criterion_9),
        ("quadrature oracle vs closed form", criterion_10),
        ("experiment output is deterministic", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("acceptance {:>2} {tag}: {name} -- {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

