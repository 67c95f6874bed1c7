//! Acceptance suite: one test per criterion (c01..c11), each printing one
//! PASS/FAIL line with the measured quantities before asserting. Every
//! tolerance is pinned here, in code.

use copac::boosting::{
    adaboost, boost_budget, distributed_boost, init_reservoirs, BoostConfig, ExactWeakLearner,
    ResamplingWeakLearner,
};
use copac::centralized::{
    centralized_learning, centralized_learning_cn, CentralizedConfig, CentralizedVariant,
};
use copac::distribution::{
    noisy_error_formula, sample_noisy, true_error, CleanDistribution, Player, TargetConcept,
};
use copac::harness::{run_with_seed, sweep};
use copac::hypothesis::{
    empirical_error, learn_erm, oracle, Hypothesis, HypothesisClassSpec, LabeledExample, Polarity,
};
use copac::network::CommLedger;
use copac::personalized::{
    cn_test, personalized_learning, personalized_learning_cn, PersonalizedConfig,
    PersonalizedVariant,
};
use copac::rng::{child_seed, seeded_rng, stream};
use copac::scenario::{Mode, ScenarioConfig};
use rand::Rng;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn unit_players(k: usize, eta: f64, master: u64) -> Vec<Player> {
    (0..k)
        .map(|i| Player::new(i, CleanDistribution::uniform_unit(1), eta, master).unwrap())
        .collect()
}

fn staggered_players(k: usize, eta: f64, master: u64) -> Vec<Player> {
    (0..k)
        .map(|i| {
            let half = 0.06 * (i + 1) as f64;
            let d = CleanDistribution::uniform_box(vec![0.5 - half], vec![0.5 + half]).unwrap();
            Player::new(i, d, eta, master).unwrap()
        })
        .collect()
}

fn threshold_target(t: f64) -> TargetConcept {
    TargetConcept::new(Hypothesis::threshold(t, Polarity::Positive))
}

/// c1: analytic noisy error equals eta + err(1-2 eta) to 1e-12 on 200
/// random (h, discrete D, eta) triples; Monte-Carlo over 1e5 draws agrees
/// within 3 sigma.
#[test]
fn c01_noisy_error_identity() {
    let mut rng = seeded_rng(101, &[]);
    let mut max_dev: f64 = 0.0;
    let mut mc_failures = 0u32;
    let triples = 200;
    for trial in 0..triples {
        let support_size = rng.random_range(2..=8);
        let raw: Vec<f64> = (0..support_size)
            .map(|_| rng.random::<f64>() + 0.05)
            .collect();
        let total: f64 = raw.iter().sum();
        let support: Vec<(Vec<f64>, f64)> = raw
            .iter()
            .map(|p| (vec![rng.random::<f64>()], p / total))
            .collect();
        let dist = CleanDistribution::discrete(support.clone()).unwrap();
        let eta = 0.49 * rng.random::<f64>();
        let h = Hypothesis::threshold(rng.random(), Polarity::Positive);
        let target = threshold_target(rng.random());

        // Independent analytic route: per-point flip probabilities.
        let clean = true_error(&h, &dist, &target).unwrap();
        let direct: f64 = support
            .iter()
            .map(|(x, p)| {
                let disagrees = h.predict(x) != target.label(x);
                p * if disagrees { 1.0 - eta } else { eta }
            })
            .sum();
        let formula = noisy_error_formula(clean, eta);
        max_dev = max_dev.max((direct - formula).abs());

        // Monte-Carlo route.
        let player = Player::new(0, dist, eta, child_seed(101, &[trial])).unwrap();
        let mut draw_rng = player.stream(&[0, stream::TEST]);
        let n = 100_000u64;
        let sample = sample_noisy(&player, &target, n, &mut draw_rng);
        let emp = sample.iter().filter(|e| h.predict(&e.x) != e.y).count() as f64 / n as f64;
        let sigma = (formula * (1.0 - formula) / n as f64).sqrt();
        if (emp - formula).abs() > 3.0 * sigma {
            mc_failures += 1;
        }
    }
    let ok = max_dev <= 1e-12 && mc_failures == 0;
    println!(
        "[c01] noisy-error identity: {} (max analytic dev {max_dev:.2e}, {mc_failures}/{triples} beyond 3 sigma)",
        verdict(ok)
    );
    assert!(ok);
}

/// c2: learn_erm's empirical error equals the brute-force enumeration's
/// exactly on 500 random samples (sizes <= 64) across both 1-D classes.
#[test]
fn c02_erm_oracle_equivalence() {
    let mut rng = seeded_rng(202, &[]);
    let mut checked = 0u32;
    let mut mismatches = 0u32;
    for class in [
        HypothesisClassSpec::threshold_1d(),
        HypothesisClassSpec::interval_1d(),
    ] {
        for _ in 0..250 {
            let m = rng.random_range(1..=64);
            let sample: Vec<LabeledExample> = (0..m)
                .map(|_| LabeledExample::point1(rng.random(), rng.random::<f64>() < 0.5))
                .collect();
            let h = learn_erm(&class, &sample).unwrap();
            let err = empirical_error(&h, &sample).unwrap();
            let (_, best) = oracle::brute_force_best(&class, &sample).unwrap();
            checked += 1;
            if err != best {
                mismatches += 1;
            }
        }
    }
    let ok = mismatches == 0;
    println!(
        "[c02] ERM oracle equivalence: {} ({checked} samples, {mismatches} mismatches)",
        verdict(ok)
    );
    assert!(ok);
}

/// c3: CN-TEST at |N|=8, eps=0.1, eta=0.2, delta'=0.025 — clean error
/// eps/4 passes and clean error 2 eps fails, each in >= 97.5% of 1000
/// trials.
#[test]
fn c03_cn_test_chernoff_behavior() {
    let eps = 0.1;
    let dp = 0.025;
    let eta = 0.2;
    let target = threshold_target(0.5);
    let cfg = PersonalizedConfig::new(eps, 0.1, PersonalizedVariant::PlCn);
    let h_good = Hypothesis::threshold(0.5 - eps / 4.0, Polarity::Positive);
    let h_bad = Hypothesis::threshold(0.5 - 2.0 * eps, Polarity::Positive);

    let trials = 1000u64;
    let mut good_passes = 0u64;
    let mut bad_fails = 0u64;
    let live: Vec<usize> = (0..8).collect();
    for t in 0..trials {
        let players = unit_players(8, eta, child_seed(303, &[t]));
        let mut ledger = CommLedger::new();
        let r = cn_test(
            &h_good,
            &live,
            eps,
            dp,
            &players,
            &target,
            &cfg,
            1,
            &mut ledger,
        )
        .unwrap();
        good_passes += r.passed.contains(&0) as u64;
        let r = cn_test(
            &h_bad,
            &live,
            eps,
            dp,
            &players,
            &target,
            &cfg,
            2,
            &mut ledger,
        )
        .unwrap();
        bad_fails += !r.passed.contains(&0) as u64;
    }
    let need = (0.975 * trials as f64) as u64;
    let ok = good_passes >= need && bad_fails >= need;
    println!(
        "[c03] CN-TEST Chernoff rates: {} (good passes {good_passes}/1000, bad fails {bad_fails}/1000, need {need})",
        verdict(ok)
    );
    assert!(ok);
}

/// c4: over 200 seeded runs each of PL and PL-CN (k=8 threshold players,
/// eps=0.1, delta=0.1, eta=0.2 for CN), the fraction with success AND max
/// clean error <= eps is >= 0.85.
#[test]
fn c04_personalized_pac_guarantee() {
    let spec = HypothesisClassSpec::threshold_1d();
    let target = threshold_target(0.5);
    let trials = 200u64;

    let pl_cfg = PersonalizedConfig::new(0.1, 0.1, PersonalizedVariant::Pl);
    let mut pl_good = 0u64;
    for t in 0..trials {
        let seed = child_seed(404, &[t]);
        let players = staggered_players(8, 0.0, seed);
        let out = personalized_learning(&players, &target, &spec, &pl_cfg, seed).unwrap();
        pl_good += (out.success && out.max_clean_error() <= 0.1) as u64;
    }

    let cn_cfg = PersonalizedConfig::new(0.1, 0.1, PersonalizedVariant::PlCn);
    let mut cn_good = 0u64;
    for t in 0..trials {
        let seed = child_seed(405, &[t]);
        let players = staggered_players(8, 0.2, seed);
        let out = personalized_learning_cn(&players, &target, &spec, &cn_cfg, seed).unwrap();
        cn_good += (out.success && out.max_clean_error() <= 0.1) as u64;
    }

    let need = (0.85 * trials as f64) as u64;
    let ok = pl_good >= need && cn_good >= need;
    println!(
        "[c04] personalized PAC guarantee: {} (PL {pl_good}/200, PL-CN {cn_good}/200, need {need})",
        verdict(ok)
    );
    assert!(ok);
}

fn sweep_scenario(algorithm: &str, class: &str, sweep: &str) -> ScenarioConfig {
    let text = format!(
        r#"
        algorithm = "{algorithm}"
        epsilon = 0.1
        delta = 0.1
        seed = 505
        trials = 15

        [class]
        {class}

        [target]
        kind = "stump"
        feature = 0
        t = 0.5

        [[players]]
        dist = "uniform-box"
        lo = [{lo}]
        hi = [{hi}]

        [sweep]
        {sweep}
        "#,
        lo = vec!["0.0"; 16].join(", "),
        hi = vec!["1.0"; 16].join(", "),
    );
    ScenarioConfig::from_toml_str(&text).unwrap()
}

/// c5: sweeping k over 2,4,8,16 at eps=0.1, the baseline's consecutive
/// consumption ratio stays within 2.0 +- 0.2 while PL's is strictly
/// smaller at every step.
#[test]
fn c05_overhead_separation() {
    let class = "kind = \"stumpnd\"\n        features = 16\n        vc_dimension = 6";
    let axis = "axis = \"k\"\n        values = [2, 4, 8, 16]";
    let base = sweep_scenario("baseline", class, axis);
    let pl = sweep_scenario("pl", class, axis);

    let base_out = sweep(&base, Mode::Desk, 15).unwrap();
    let pl_out = sweep(&pl, Mode::Desk, 15).unwrap();
    let br = &base_out.summary.consumed_ratios;
    let pr = &pl_out.summary.consumed_ratios;

    let base_ok = br.iter().all(|r| (1.8..=2.2).contains(r));
    let sep_ok = pr.iter().zip(br).all(|(p, b)| p < b);
    let ok = base_ok && sep_ok;
    println!(
        "[c05] overhead separation: {} (baseline ratios {:?}, PL ratios {:?})",
        verdict(ok),
        br.iter()
            .map(|r| (r * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
        pr.iter()
            .map(|r| (r * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
    );
    assert!(ok);
}

fn eps_sweep_scenario(algorithm: &str) -> ScenarioConfig {
    let players = (0..8)
        .map(|_| "[[players]]\ndist = \"uniform-box\"\nlo = [0.0]\nhi = [1.0]\n")
        .collect::<String>();
    let text = format!(
        r#"
        algorithm = "{algorithm}"
        epsilon = 0.1
        delta = 0.1
        seed = 606
        trials = 25

        [class]
        kind = "threshold1d"

        [target]
        kind = "threshold"
        t = 0.5

        {players}

        [sweep]
        axis = "epsilon"
        values = [0.2, 0.1, 0.05]
        "#
    );
    ScenarioConfig::from_toml_str(&text).unwrap()
}

/// c6: sweeping eps over 0.2, 0.1, 0.05 at k=8, PL's transmitted samples
/// roughly double per halving (ratio >= 1.7) while the boosting variant
/// grows sub-linearly (ratio <= 1.4).
#[test]
fn c06_communication_scaling() {
    let pl_out = sweep(&eps_sweep_scenario("pl"), Mode::Desk, 25).unwrap();
    let boost_out = sweep(&eps_sweep_scenario("pl-boost"), Mode::Desk, 25).unwrap();
    let pl_ratios = &pl_out.summary.communicated_ratios;
    let boost_ratios = &boost_out.summary.communicated_ratios;

    let pl_ok = pl_ratios.iter().all(|r| *r >= 1.7);
    let boost_ok = boost_ratios.iter().all(|r| *r <= 1.4);
    let ok = pl_ok && boost_ok;
    println!(
        "[c06] communication scaling: {} (PL ratios {:?}, PL-Boost ratios {:?})",
        verdict(ok),
        pl_ratios
            .iter()
            .map(|r| (r * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
        boost_ratios
            .iter()
            .map(|r| (r * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
    );
    assert!(ok);
}

/// c7: with a single player and matched seeds, the distributed booster and
/// AdaBoost with the resampling weak learner emit structurally identical
/// round sequences on 50 random instances.
#[test]
fn c07_distributed_equals_adaboost_at_k1() {
    let spec = HypothesisClassSpec::threshold_1d();
    let cfg = BoostConfig::default();
    let eps = 0.1;
    let n_work = 10; // ceil(c_round * d)
    let mut identical = 0u32;
    let instances = 50;
    for i in 0..instances {
        let seed = child_seed(707, &[i as u64]);
        let mut t_rng = seeded_rng(seed, &[99]);
        let target = threshold_target(0.2 + 0.6 * t_rng.random::<f64>());
        let players = unit_players(1, 0.0, seed);

        // Replay the reservoir fill the distributed run will perform.
        let m_boost = boost_budget(1, eps, &cfg);
        let mut res_rng = players[0].stream(&[0, stream::RESERVOIR]);
        let sample = sample_noisy(&players[0], &target, m_boost, &mut res_rng);
        let mut weak = ResamplingWeakLearner::new(players[0].stream_seed, 0, n_work);
        let central = adaboost(&sample, &mut weak, &cfg).unwrap();

        let mut center = seeded_rng(seed, &[stream::CENTER]);
        let mut ledger = CommLedger::new();
        let dist = distributed_boost(
            &players,
            &target,
            &spec,
            eps,
            &cfg,
            0,
            &mut center,
            &mut ledger,
        )
        .unwrap();

        if central.rounds == dist.rounds && central.ensemble == dist.ensemble {
            identical += 1;
        }
    }
    let ok = identical == instances;
    println!(
        "[c07] k=1 distributed == adaboost: {} ({identical}/{instances} identical sequences)",
        verdict(ok)
    );
    assert!(ok);
}

/// c8: the reservoir budget is a function of (d, T, eps) only — identical
/// across k in 1, 4, 64 — and 100 random reservoir allocations sum to it
/// exactly.
#[test]
fn c08_budget_k_independence() {
    let spec = HypothesisClassSpec::threshold_1d();
    let cfg = BoostConfig::default();
    let eps = 0.1;
    let target = threshold_target(0.5);

    let mut budgets = Vec::new();
    for &k in &[1usize, 4, 64] {
        let seed = 808;
        let players = unit_players(k, 0.0, seed);
        let mut center = seeded_rng(seed, &[stream::CENTER, k as u64]);
        let mut ledger = CommLedger::new();
        let out = distributed_boost(
            &players,
            &target,
            &spec,
            eps,
            &cfg,
            0,
            &mut center,
            &mut ledger,
        )
        .unwrap();
        budgets.push(out.budget);
    }
    let reference = boost_budget(1, eps, &cfg);
    let budget_ok = budgets.iter().all(|b| *b == reference);

    let mut alloc_ok = true;
    let mut rng = seeded_rng(809, &[]);
    for i in 0..100u64 {
        let k = 1 + (i % 16) as usize;
        let mut ledger = CommLedger::new();
        let sizes = init_reservoirs(reference, k, &mut rng, &mut ledger, 1).unwrap();
        if sizes.iter().sum::<u64>() != reference {
            alloc_ok = false;
        }
    }
    let ok = budget_ok && alloc_ok;
    println!(
        "[c08] budget k-independence: {} (budgets {budgets:?}, reference {reference}, allocations conserve: {alloc_ok})",
        verdict(ok)
    );
    assert!(ok);
}

// Random union-of-intervals labeling: realizable by threshold ensembles
// but generally not by a single threshold.
fn interval_union_sample(rng: &mut impl Rng, m: usize) -> Vec<LabeledExample> {
    let pieces = rng.random_range(1..=3);
    let mut cuts: Vec<f64> = (0..2 * pieces).map(|_| rng.random()).collect();
    cuts.sort_by(f64::total_cmp);
    let inside = |x: f64| cuts.chunks(2).any(|c| c[0] <= x && x <= c[1]);
    (0..m)
        .map(|_| {
            let x: f64 = rng.random();
            LabeledExample::point1(x, inside(x))
        })
        .collect()
}

/// c9: on 100 random realizable 1-D samples (m <= 256), AdaBoost reaches
/// zero training error within ceil(ln m / (2 gamma_hat^2)) rounds, where
/// gamma_hat is the worst observed round edge.
#[test]
fn c09_adaboost_bound() {
    let mut rng = seeded_rng(909, &[]);
    let cfg = BoostConfig {
        max_rounds: 4096,
        ..BoostConfig::default()
    };
    let instances = 100;
    let mut within_bound = 0u32;
    let mut max_rounds_seen = 0usize;
    for _ in 0..instances {
        let m = rng.random_range(2..=256);
        let sample = interval_union_sample(&mut rng, m);
        let out = adaboost(&sample, &mut ExactWeakLearner, &cfg).unwrap();
        let reached_zero = *out.training_error_trace.last().unwrap() == 0.0;
        let worst_edge = out
            .rounds
            .iter()
            .map(|r| 0.5 - r.weighted_error)
            .fold(f64::INFINITY, f64::min);
        let bound =
            (((sample.len() as f64).ln() / (2.0 * worst_edge * worst_edge)).ceil() as usize).max(1);
        max_rounds_seen = max_rounds_seen.max(out.rounds_used());
        if reached_zero && out.rounds_used() <= bound {
            within_bound += 1;
        }
    }
    let ok = within_bound == instances;
    println!(
        "[c09] AdaBoost training-error bound: {} ({within_bound}/{instances} within bound, max rounds used {max_rounds_seen})",
        verdict(ok)
    );
    assert!(ok);
}

/// c10: k=4 identical players, eps=0.2, delta=0.1, round multiplier 10 —
/// the majority ensemble's clean error is <= eps for every player in at
/// least 85% of 50 trials, for Central and for Central-CN at eta=0.15.
#[test]
fn c10_centralized_correctness() {
    let spec = HypothesisClassSpec::threshold_1d();
    let target = threshold_target(0.5);
    let trials = 50u64;

    let cfg = CentralizedConfig::desk(0.2, 0.1, CentralizedVariant::Central);
    let mut plain_good = 0u64;
    for t in 0..trials {
        let seed = child_seed(1010, &[t]);
        let players = unit_players(4, 0.0, seed);
        let out = centralized_learning(&players, &target, &spec, &cfg, seed).unwrap();
        plain_good += (out.max_clean_error() <= 0.2) as u64;
    }

    let cfg_cn = CentralizedConfig::desk(0.2, 0.1, CentralizedVariant::CentralCn);
    let mut cn_good = 0u64;
    for t in 0..trials {
        let seed = child_seed(1011, &[t]);
        let players = unit_players(4, 0.15, seed);
        let out = centralized_learning_cn(&players, &target, &spec, &cfg_cn, seed).unwrap();
        cn_good += (out.max_clean_error() <= 0.2) as u64;
    }

    let need = (0.85 * trials as f64) as u64;
    let ok = plain_good >= need && cn_good >= need;
    println!(
        "[c10] centralized correctness: {} (Central {plain_good}/50, Central-CN {cn_good}/50, need {need})",
        verdict(ok)
    );
    assert!(ok);
}

/// c11: ledgers are sound across the full algorithm matrix — baselines
/// transmit exactly zero samples, per-event sums reproduce the counters,
/// and transmitted never exceeds consumed in any row.
#[test]
fn c11_ledger_soundness() {
    // Direct outcome-level conservation checks on the personalized side.
    let spec = HypothesisClassSpec::threshold_1d();
    let target = threshold_target(0.5);
    for (variant, eta) in [
        (PersonalizedVariant::Baseline, 0.1),
        (PersonalizedVariant::Pl, 0.0),
        (PersonalizedVariant::PlBoost, 0.0),
        (PersonalizedVariant::PlCn, 0.2),
        (PersonalizedVariant::PlCnBoost, 0.1),
    ] {
        let cfg = PersonalizedConfig::new(0.2, 0.1, variant);
        let seed = 1100 + variant as u64;
        let players = unit_players(4, eta, seed);
        let out =
            copac::personalized::run_personalized(&players, &target, &spec, &cfg, seed).unwrap();
        let ledger = &out.ledger;
        let sample_events: u64 = ledger.per_round_log().iter().map(|r| r.1).sum();
        let bit_events: u64 = ledger.per_round_log().iter().map(|r| r.2).sum();
        assert_eq!(
            sample_events,
            ledger.samples_sent(),
            "{variant:?} conservation"
        );
        assert_eq!(bit_events, ledger.bits_sent(), "{variant:?} conservation");
        assert!(out.samples_consumed >= ledger.samples_sent(), "{variant:?}");
        if variant == PersonalizedVariant::Baseline {
            assert_eq!(ledger.samples_sent(), 0);
            assert_eq!(ledger.bits_sent(), 0);
        }
    }

    // Row-level matrix across every algorithm via the harness.
    let algorithms = [
        ("baseline", 0.1),
        ("pl", 0.0),
        ("pl-boost", 0.0),
        ("pl-cn", 0.2),
        ("pl-cn-boost", 0.1),
        ("central", 0.0),
        ("central-boost", 0.0),
        ("central-cn", 0.15),
        ("central-cn-boost", 0.1),
    ];
    let mut rows = 0u32;
    let mut violations = 0u32;
    for (algo, eta) in algorithms {
        let players = (0..4)
            .map(|_| {
                format!(
                    "[[players]]\ndist = \"uniform-box\"\nlo = [0.0]\nhi = [1.0]\neta = {eta}\n"
                )
            })
            .collect::<String>();
        let text = format!(
            r#"
            algorithm = "{algo}"
            epsilon = 0.2
            delta = 0.1
            seed = 1111

            [class]
            kind = "threshold1d"

            [target]
            kind = "threshold"
            t = 0.5

            {players}
            "#
        );
        let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
        for t in 0..3u64 {
            let row = run_with_seed(&cfg, Mode::Desk, child_seed(1111, &[t])).unwrap();
            rows += 1;
            if row.samples_communicated > row.samples_consumed {
                violations += 1;
            }
            if algo == "baseline" && row.samples_communicated != 0 {
                violations += 1;
            }
            if !(0.0..=1.0).contains(&row.max_player_clean_error) {
                violations += 1;
            }
        }
    }
    let ok = violations == 0;
    println!(
        "[c11] ledger soundness: {} ({rows} rows across 9 algorithms, {violations} violations)",
        verdict(ok)
    );
    assert!(ok);
}
