use std::sync::Arc;

use udn_mobility::brew::brew_batch_length;
use udn_mobility::env::{forced_handover_scenario, ChannelSpec, GeneratorSpec, Scenario};
use udn_mobility::harness::{contextual_regret, expert_regret, fixed_action_regret, run_policy, ExpertPool};
use udn_mobility::policy::AlgoSpec;

fn noisy(n: usize) -> Scenario {
    let means = (0..n).map(|a| 0.2 + 0.1 * a as f64).collect();
    Scenario::new("noisy", n, 0.2, GeneratorSpec::UniformNoise { means, half_width: 0.15 })
}

#[test]
fn brew_switches_only_at_batch_boundaries() {
    let (n, horizon) = (5, 5_000);
    let sc = noisy(n);
    let matrix = sc.realize(horizon, 3).unwrap();
    let tau = brew_batch_length(n, horizon);
    for rep in 0..5 {
        let rec = run_policy(&"brew".parse().unwrap(), &sc, matrix.clone(), horizon, 3, rep).unwrap();
        for (i, &s) in rec.switched.iter().enumerate().skip(1) {
            assert!(!s || i % tau == 0, "switch inside a batch at slot {i}");
        }
        assert!(rec.handovers() <= horizon.div_ceil(tau));
    }
}

#[test]
fn delayed_feedback_never_switches_inside_a_batch() {
    let sc = noisy(3).with_channel(ChannelSpec { delay: 4, p_miss: 0.0 });
    let matrix = sc.realize(3_000, 5).unwrap();
    let tau = brew_batch_length(3, 3_000);
    let rec = run_policy(&"brew".parse().unwrap(), &sc, matrix, 3_000, 5, 0).unwrap();
    assert!(rec.switched.iter().enumerate().skip(1).all(|(i, &s)| !s || i % tau == 0));
}

#[test]
fn fixed_policy_on_the_best_arm_has_zero_regret() {
    let sc = Scenario::new("c", 3, 0.2, GeneratorSpec::Constant { means: vec![0.5, 0.2, 0.4] });
    let matrix = sc.realize(500, 1).unwrap();
    let rec = run_policy(&AlgoSpec::Fixed { arm: 1 }, &sc, matrix.clone(), 500, 1, 0).unwrap();
    let r = fixed_action_regret(&rec, &matrix, 3).unwrap();
    // at most the one handover from the random initial association
    assert!((0.0..=0.2 + 1e-12).contains(&r));
}

#[test]
fn comparators_nest_as_expected() {
    // the full ranking-expert pool contains every basic ranking, so its regret is larger
    let sc = noisy(3).with_availability(udn_mobility::env::AvailabilitySpec::Iid { p_on: vec![0.7; 3] });
    let matrix: Arc<Vec<f64>> = sc.realize(2_000, 8).unwrap();
    for algo in ["re", "cre", "ext-macro"] {
        let rec = run_policy(&algo.parse().unwrap(), &sc, matrix.clone(), 2_000, 8, 0).unwrap();
        let basic = expert_regret(&rec, &matrix, 3, ExpertPool::BasicRankings).unwrap();
        let full = expert_regret(&rec, &matrix, 3, ExpertPool::RankingExperts).unwrap();
        assert!(full >= basic - 1e-9, "{algo}: {full} < {basic}");
        assert!(contextual_regret(&rec, &matrix, 3).is_ok());
    }
}

#[test]
fn forced_handover_adversary_switches_every_slot() {
    let sc = forced_handover_scenario(3, 400, 0.2 + 0.5, 0.2).unwrap();
    let matrix = sc.realize(400, 2).unwrap();
    for algo in ["brew", "re", "cre", "macro", "fho", "ext-macro"] {
        let rec = run_policy(&algo.parse().unwrap(), &sc, matrix.clone(), 400, 2, 0).unwrap();
        assert!(rec.switched.iter().skip(1).all(|&s| s), "{algo} stayed put");
        for (t, &a) in rec.actions.iter().enumerate().skip(1) {
            assert!(rec.availability[t].contains(a));
            assert_ne!(a, rec.actions[t - 1]);
        }
    }
}

#[test]
fn algo_strings_round_trip() {
    for s in ["brew", "brew:tau=7", "brew-missing:p=0.3", "re", "re-naive", "cre", "macro:threshold=0.2", "fho", "ext-macro", "fixed:arm=2"]
    {
        let a: AlgoSpec = s.parse().unwrap();
        assert_eq!(a.to_string().parse::<AlgoSpec>().unwrap(), a);
    }
    assert!("brew:tau=0".parse::<AlgoSpec>().is_err() || "brew:tau=0".parse::<AlgoSpec>().unwrap().build(&noisy(2), 10).is_err());
    assert!("brew:colour=red".parse::<AlgoSpec>().is_err());
}
