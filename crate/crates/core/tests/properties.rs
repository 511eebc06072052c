use pathplan_core::{
    accuracy_reward, admissible_paths, average_accuracy, baseline_throughput, brute_force,
    enumerate_paths, inverse_distance_mean, path_distance, path_throughput, predict_accuracy,
    Bottleneck, EvaluatedSet, LinkProfile, PathSpec, RewardConfig, Scenario, SearchConfig,
    ServiceProfile, SyntheticOracle,
};
use proptest::prelude::*;

fn arb_costs(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.0f64..0.5, 0.01f64..1.0), n)
}

prop_compose! {
    fn arb_scenario()(
        local in arb_costs(2..=6),
        host in proptest::option::of(arb_costs(1..=6)),
        b_l in 2usize..40,
        b_h in 1usize..40,
        s_frac in 0.05f64..1.0,
        links in proptest::collection::vec((0.0f64..0.2, 0.0f64..0.05), 3),
    ) -> Scenario {
        let s = ((b_l as f64 * s_frac).ceil() as usize).clamp(1, b_l);
        let mut sc = Scenario::new(
            "prop",
            ServiceProfile::from_costs("local", &local, b_l, 0.87),
            host.map(|h| ServiceProfile::from_costs("host", &h, b_h, 0.8)),
            s,
        );
        sc.entry_link = LinkProfile::on_host(links[0].0, links[0].1);
        sc.exit_link = LinkProfile::on_host(links[1].0, links[1].1);
        sc.skip_link = LinkProfile::on_local(links[2].0, links[2].1);
        sc
    }
}

fn arb_path() -> impl Strategy<Value = PathSpec> {
    (0usize..8, 1usize..8, 0usize..8, 0usize..8, any::<bool>()).prop_map(
        |(lout, gap, h1, h2, skip)| {
            if skip {
                PathSpec::skip(lout, lout + gap)
            } else {
                PathSpec::cross(lout, h1.min(h2), h1.max(h2), lout + gap)
            }
        },
    )
}

fn scaled(sc: &Scenario, gamma: f64) -> Scenario {
    let mut out = sc.clone();
    let services = std::iter::once(&mut out.local).chain(out.host.as_mut());
    for svc in services {
        for b in &mut svc.blocks {
            b.fixed_cost *= gamma;
            b.per_sample_cost *= gamma;
        }
    }
    for l in [&mut out.entry_link, &mut out.exit_link, &mut out.skip_link] {
        l.fixed_cost *= gamma;
        l.per_sample_cost *= gamma;
    }
    out
}

proptest! {
    #[test]
    fn distance_is_a_metric(a in arb_path(), b in arb_path(), c in arb_path(), n_f in 9usize..200) {
        let ab = path_distance(&a, &b, n_f);
        prop_assert_eq!(ab, path_distance(&b, &a, n_f));
        prop_assert_eq!(ab == 0.0, a.vector(n_f) == b.vector(n_f));
        let (bc, ac) = (path_distance(&b, &c, n_f), path_distance(&a, &c, n_f));
        prop_assert!(ac <= ab + bc + 1e-9 * (ab + bc));
    }

    #[test]
    fn stream_rates_add_up_exactly(sc in arb_scenario()) {
        let base = baseline_throughput(&sc);
        for p in enumerate_paths(&sc) {
            let tp = path_throughput(&sc, &p).unwrap();
            prop_assert_eq!(tp.th_local + tp.th_host, tp.th_total);
            prop_assert!(tp.th_total > 0.0 && tp.th_host > 0.0 && tp.th_local >= 0.0);
            // bottleneck labels the larger cycle, local on ties
            let expect = if tp.t_host_cycle > tp.t_local_cycle { Bottleneck::Host } else { Bottleneck::Local };
            prop_assert_eq!(tp.bottleneck, expect);
            let ratio = tp.th_host / tp.th_total;
            let share = sc.offload_count as f64 / sc.local.batch_size as f64;
            prop_assert!((ratio - share).abs() < 1e-12);
            let (b_l, s) = (sc.local.batch_size, sc.offload_count);
            if s < b_l {
                let cap = base.th_0 * b_l as f64 / (b_l - s) as f64;
                prop_assert!(tp.th_total <= cap * (1.0 + 1e-12));
            }
        }
        for (p, tp) in admissible_paths(&sc) {
            prop_assert!(tp.th_total > base.th_0, "{} not faster", p);
        }
    }

    #[test]
    fn heavier_skipped_block_raises_the_advantage(
        sc in arb_scenario(),
        extra in 0.01f64..2.0,
    ) {
        prop_assume!(sc.local.num_blocks() >= 3);
        let block = 1;
        let mut heavier = sc.clone();
        heavier.local.blocks[block].per_sample_cost += extra;
        let (b0, b1) = (baseline_throughput(&sc), baseline_throughput(&heavier));
        prop_assert!(b1.th_0 <= b0.th_0);
        for p in enumerate_paths(&sc).into_iter().filter(|p| p.skipped_blocks().contains(&block)) {
            let before = path_throughput(&sc, &p).unwrap();
            let after = path_throughput(&heavier, &p).unwrap();
            if before.bottleneck == Bottleneck::Local && after.bottleneck == Bottleneck::Local {
                prop_assert!(after.th_total / b1.th_0 >= before.th_total / b0.th_0 * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn prediction_is_a_convex_permutation_invariant_blend(
        rows in proptest::collection::vec((arb_path(), 0.0f64..=1.0), 1..12),
        candidate in arb_path(),
        rotate in 0usize..12,
    ) {
        let known: EvaluatedSet = rows.iter().copied().collect();
        let a = predict_accuracy(&candidate, &known, 100).unwrap();
        let lo = known.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let hi = known.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= a && a <= hi);
        let mut shuffled: Vec<_> = known.iter().copied().collect();
        let len = shuffled.len();
        shuffled.rotate_left(rotate % len);
        shuffled.reverse();
        let other: EvaluatedSet = shuffled.into_iter().collect();
        let b = predict_accuracy(&candidate, &other, 100).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        if let Some(stored) = known.get(&candidate) {
            prop_assert_eq!(a.to_bits(), stored.to_bits());
        }
    }

    #[test]
    fn moving_a_point_closer_pulls_the_prediction(
        rest in proptest::collection::vec((0.5f64..50.0, 0.0f64..=1.0), 1..8),
        target_acc in 0.0f64..=1.0,
        far in 1.0f64..60.0,
        shrink in 0.05f64..0.95,
    ) {
        let with = |d: f64| {
            let mut pts = rest.clone();
            pts.push((d, target_acc));
            inverse_distance_mean(&pts).unwrap()
        };
        let before = with(far);
        let after = with(far * shrink);
        prop_assert!((after - target_acc).abs() <= (before - target_acc).abs() + 1e-12);
    }

    #[test]
    fn average_accuracy_lies_between_inputs(sc in arb_scenario(), a_p in 0.0f64..=1.0) {
        for p in enumerate_paths(&sc) {
            let tp = path_throughput(&sc, &p).unwrap();
            let a_av = average_accuracy(&tp, sc.local.base_accuracy, a_p);
            let (lo, hi) = (a_p.min(sc.local.base_accuracy), a_p.max(sc.local.base_accuracy));
            prop_assert!(lo - 1e-12 <= a_av && a_av <= hi + 1e-12);
        }
    }

    #[test]
    fn sigmoid_is_increasing(x in 0.0f64..1.0, dx in 1e-6f64..0.5, k in 1.0f64..200.0, a_min in 0.01f64..0.99) {
        let cfg = RewardConfig::new(k, a_min).unwrap();
        let y = (x + dx).min(1.0);
        prop_assume!(y > x);
        prop_assert!(accuracy_reward(y, &cfg) >= accuracy_reward(x, &cfg));
    }
}

#[test]
fn uniform_time_scaling_keeps_the_argmax() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
    let mut checked = 0;
    while checked < 20 {
        let n_l = rng.random_range(3..=5);
        let n_h = rng.random_range(2..=5);
        let local: Vec<_> = (0..n_l)
            .map(|_| (rng.random_range(0.0..0.05), rng.random_range(0.01..0.1)))
            .collect();
        let host: Vec<_> = (0..n_h)
            .map(|_| (rng.random_range(0.0..0.02), rng.random_range(0.001..0.03)))
            .collect();
        let sc = Scenario::new(
            "scale",
            ServiceProfile::from_costs("l", &local, 16, 0.88),
            Some(ServiceProfile::from_costs("h", &host, 16, 0.8)),
            rng.random_range(1..=8),
        );
        if admissible_paths(&sc).is_empty() {
            continue;
        }
        let oracle = SyntheticOracle::new(0.85, 0.2, 0.15, 0.01, rng.random()).unwrap();
        let cfg = SearchConfig::new(RewardConfig::new(100.0, 0.84).unwrap(), 0.0, 1);
        let gamma: f64 = rng.random_range(0.1..10.0);
        let a = brute_force(&sc, &oracle, &cfg).unwrap();
        let b = brute_force(&scaled(&sc, gamma), &oracle, &cfg).unwrap();
        assert_eq!(a.best.path, b.best.path, "gamma {gamma}");
        assert!((b.best.throughput_reward * gamma / a.best.throughput_reward - 1.0).abs() < 1e-9);
        checked += 1;
    }
}
