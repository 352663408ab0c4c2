use proptest::prelude::*;

use swpm_reduce::ensemble::canonical_keys;
use swpm_reduce::grouping::{reduce_grouped, GroupingConfig};
use swpm_reduce::progenitor::verify_reduction;
use swpm_reduce::reduction::{select_min_speed, solve, solve_k2, solve_quadruplet, solve_twins, AxisPair, Scheme};
use swpm_reduce::{
    destandardize, n_moments, reduce, standardize, Ensemble, MomentKey, MomentVector, SchemeConfig, WeightedParticle,
};

fn particle() -> impl Strategy<Value = WeightedParticle> {
    ([-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64], 0.01..3.0f64)
        .prop_map(|(velocity, weight)| WeightedParticle { velocity, weight })
}

fn ensemble(min: usize, max: usize) -> impl Strategy<Value = Ensemble> {
    prop::collection::vec(particle(), min..max).prop_map(Ensemble::new)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_stable_under_permutation(e in ensemble(1, 300), seed in any::<u64>()) {
        let mut ps = e.particles().to_vec();
        let n = ps.len();
        // deterministic shuffle
        let mut s = seed | 1;
        for i in (1..n).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            ps.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let shuffled = Ensemble::new(ps);
        for key in canonical_keys(3) {
            let (a, b) = (e.moment(key), shuffled.moment(key));
            let scale = e.iter().map(|p| (p.weight * key.monomial(p.velocity)).abs()).sum::<f64>();
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(1e-300), "{key}: {a} vs {b}");
        }
    }

    #[test]
    fn moments_linear_and_parity(e in ensemble(1, 50), factor in 0.1..10.0f64) {
        let scaled = e.scaled(factor);
        let negated: Ensemble = e.iter().map(|p| WeightedParticle {
            velocity: p.velocity.map(|c| -c),
            weight: p.weight,
        }).collect();
        for key in canonical_keys(3) {
            let m = e.moment(key);
            prop_assert!((scaled.moment(key) - factor * m).abs() <= 1e-12 * (factor * m).abs().max(1e-12));
            let sign = if key.order() % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((negated.moment(key) - sign * m).abs() <= 1e-12 * m.abs().max(1e-12));
        }
        prop_assert_eq!(e.moment_vector(3).unwrap().len(), n_moments(3, 3).unwrap());
    }

    #[test]
    fn tail_monotone(e in ensemble(1, 100), r1 in 0.0..9.0f64, r2 in 0.0..9.0f64) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(e.tail_functional(lo) >= e.tail_functional(hi));
        prop_assert_eq!(e.tail_functional(0.0), e.total_weight());
    }

    #[test]
    fn standardize_round_trip(e in ensemble(8, 200)) {
        if let Ok((s, t)) = standardize(&e) {
            let back = destandardize(&s, &t);
            for (a, b) in e.iter().zip(&back) {
                prop_assert!(rel(b.weight, a.weight) < 1e-12);
                for i in 0..3 {
                    prop_assert!((a.velocity[i] - b.velocity[i]).abs() < 1e-12 * a.speed().max(1.0));
                }
            }
            let mu = s.moment_vector(2).unwrap();
            let target = MomentVector::standard(2);
            for key in canonical_keys(2) {
                prop_assert!((mu.value(key) - target.value(key)).abs() < 1e-10, "{key}");
            }
        }
    }

    #[test]
    fn every_scheme_preserves_and_stays_positive(e in ensemble(40, 200), idx in 0usize..4) {
        let scheme = Scheme::ALL[idx];
        let r = reduce(&e, &SchemeConfig::new(scheme));
        prop_assert!(r.ensemble.iter().all(|p| p.weight >= 0.0));
        prop_assert!(rel(r.ensemble.total_weight(), e.total_weight()) < 1e-12);
        if !r.report.pass_through {
            prop_assert!(r.ensemble.len() <= scheme.output_size());
            let check = verify_reduction(&e, &r.ensemble, scheme.preserved_order()).unwrap();
            prop_assert!(check.within(1e-9, 1e-11), "{scheme}: {:?}", check.worst());
        } else {
            prop_assert_eq!(&r.ensemble, &e);
        }
    }

    #[test]
    fn grouped_reduction_preserves_globally(e in ensemble(100, 400), idx in 0usize..4, seed in any::<u64>()) {
        let scheme = Scheme::ALL[idx];
        let cfg = GroupingConfig { v_r: 9.0, n_group: 2 * scheme.output_size() + 2, scheme: SchemeConfig::new(scheme), seed };
        let (out, report) = reduce_grouped(&e, &cfg).unwrap();
        prop_assert!(out.len() <= e.len());
        prop_assert_eq!(report.output_count, out.len());
        let check = verify_reduction(&e, &out, scheme.preserved_order()).unwrap();
        prop_assert!(check.max_relative() < 1e-9, "{scheme}: {:e}", check.max_relative());
    }

    #[test]
    fn quadruplet_cancels(m111 in -1.0..1.0f64, s in 0.5..4.0f64) {
        let e = Ensemble::new(solve_quadruplet(m111, s));
        for key in canonical_keys(3) {
            let exps = key.exponents();
            let even = exps.iter().all(|x| x % 2 == 0);
            if key == MomentKey::new(1, 1, 1) {
                prop_assert!((e.moment(key) - m111).abs() < 1e-15);
            } else if !even {
                prop_assert!(e.moment(key).abs() < 1e-15, "{key}");
            }
        }
    }

    #[test]
    fn twins_hit_single_target(m in [-0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64], s in 0.5..4.0f64, pair in 0usize..3) {
        let pair = AxisPair::ALL[pair];
        let keys = pair.moment_keys();
        for slot in 0..3 {
            let mut only = [0.0; 3];
            only[slot] = m[slot];
            let e = Ensemble::new(solve_twins(pair, only, s));
            for key in canonical_keys(3) {
                let target = if key == keys[slot] { m[slot] } else { 0.0 };
                let exps = key.exponents();
                let contributes_by_design = exps.iter().all(|x| x % 2 == 0)
                    || (slot == 1 && [keys[1], MomentKey::pure(axis_index(pair, 0), 1), MomentKey::pure(axis_index(pair, 0), 3)].contains(&key))
                    || (slot == 2 && [keys[2], MomentKey::pure(axis_index(pair, 1), 1), MomentKey::pure(axis_index(pair, 1), 3)].contains(&key));
                if !contributes_by_design {
                    prop_assert!((e.moment(key) - target).abs() < 1e-15, "{pair:?} slot {slot} {key}");
                }
            }
            prop_assert!((e.moment(keys[slot]) - m[slot]).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_third_moments_give_k2(s_scale in 1.0..2.0f64) {
        let mu = MomentVector::standard(3);
        let s = 3f64.sqrt() * s_scale;
        let k2 = solve_k2(&MomentVector::standard(2), s).unwrap();
        for scheme in [Scheme::K2_5, Scheme::K3] {
            let cfg = SchemeConfig::new(scheme);
            prop_assert_eq!(&solve(&mu, &cfg, s).unwrap(), &k2);
        }
    }

    #[test]
    fn minimal_speed_is_feasible(e in ensemble(30, 120)) {
        if let Ok((s, _)) = standardize(&e) {
            let mu = s.moment_vector(3).unwrap();
            for scheme in [Scheme::K2, Scheme::K2_5, Scheme::K3] {
                let cfg = SchemeConfig::new(scheme);
                let speed = select_min_speed(&mu, &cfg).unwrap();
                let out = solve(&mu, &cfg, speed).unwrap();
                prop_assert!(out.iter().all(|p| p.weight > 0.0));
                if speed > 3f64.sqrt() + 1e-4 {
                    prop_assert!(solve(&mu, &cfg, speed * (1.0 - 1e-4)).is_err());
                }
            }
        }
    }
}

/// Index of the first (`which = 0`) or second axis of `pair`.
fn axis_index(pair: AxisPair, which: usize) -> usize {
    let (a, b) = pair.axes();
    if which == 0 { a.index() } else { b.index() }
}
