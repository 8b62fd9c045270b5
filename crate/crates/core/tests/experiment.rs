use collusim::experiment::{
    run_condition_suite, run_conditions, run_round, run_trial, time_to_threshold, AiMode, Condition, ConsumerClass,
    Market, TrialConfig,
};
use collusim::market::expected::fair_baseline;
use collusim::market::Catalog;

fn short(rounds: usize) -> TrialConfig {
    TrialConfig { rounds, ..TrialConfig::default() }
}

/// Each seller's window win count lies within `z` binomial standard
/// deviations of `probs[i] * n`.
fn wins_match(counts: &[u64], probs: &[f64], z: f64) -> bool {
    let n: u64 = counts.iter().sum();
    counts.iter().zip(probs).all(|(&c, &p)| {
        let mean = p * n as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (c as f64 - mean).abs() <= z * sd
    })
}

#[test]
fn baseline_winners_follow_closed_form() {
    let cfg = TrialConfig::default();
    let (probs, _, _) = fair_baseline(&Catalog::reference(), &cfg.bias, &cfg.payoff).unwrap();
    let r = run_trial(&cfg, Condition::Baseline, 0).unwrap();
    assert!(wins_match(&r.win_counts, &probs, 4.0), "{:?} vs {probs:?}", r.win_counts);
}

#[test]
fn true_random_winners_are_uniform() {
    let cfg = TrialConfig { ai_mode: AiMode::TrueRandom, ..TrialConfig::default() };
    for cond in Condition::ALL {
        let r = run_trial(&cfg, cond, 3).unwrap();
        assert!(wins_match(&r.win_counts, &[1.0 / 6.0; 6], 3.5), "{cond:?}: {:?}", r.win_counts);
    }
}

#[test]
fn joint_rounds_repeat_exactly() {
    let cfg = short(500);
    let mut a = Market::new(&cfg, Condition::Joint, cfg.seed(4)).unwrap();
    let mut b = Market::new(&cfg, Condition::Joint, cfg.seed(4)).unwrap();
    for _ in 0..500 {
        assert_eq!(run_round(&mut a).unwrap(), run_round(&mut b).unwrap());
    }
}

#[test]
fn platform_only_earns_nothing() {
    let r = run_trial(&short(3_000), Condition::PlatformOnly, 1).unwrap();
    assert_eq!(r.platform_mean, 0.0);
    assert_eq!(r.mean_bid, 0.0);
}

#[test]
fn pure_high_bias_population_equals_unmixed() {
    let mixed = TrialConfig {
        population: vec![
            ConsumerClass { fraction: 1.0, bias_multiplier: 1.0 },
            ConsumerClass { fraction: 0.0, bias_multiplier: 0.5 },
        ],
        ..short(3_000)
    };
    for cond in Condition::ALL {
        assert_eq!(run_trial(&mixed, cond, 2).unwrap(), run_trial(&short(3_000), cond, 2).unwrap());
    }
}

#[test]
fn window_means_recompute_from_series() {
    let cfg = TrialConfig { record_series: true, ..short(5_000) };
    let r = run_trial(&cfg, Condition::Joint, 0).unwrap();
    let s = r.series.as_ref().unwrap();
    let mean = |v: &[f64]| v[r.window_start..].iter().sum::<f64>() / r.window_len() as f64;
    assert_eq!(r.window_len(), 2_000);
    assert!((mean(&s.cs) - r.cs_mean).abs() < 1e-12);
    assert!((mean(&s.platform_profit) - r.platform_mean).abs() < 1e-12);
    assert!((mean(&s.seller_profit) - r.seller_mean).abs() < 1e-12);
    let wins = (0..6).map(|i| s.winner[r.window_start..].iter().filter(|&&w| w as usize == i).count() as u64);
    assert!(wins.eq(r.win_counts.iter().copied()));
}

#[test]
fn seeds_follow_trial_index() {
    let r = run_trial(&short(200), Condition::Baseline, 7).unwrap();
    assert_eq!(r.seed, 742);
    let other = TrialConfig { seed_base: 0, ..short(200) };
    assert_eq!(run_trial(&other, Condition::Baseline, 7).unwrap().seed, 700);
}

#[test]
fn unreachable_threshold_is_flagged() {
    let cfg = TrialConfig { checkpoints: vec![1_000, 2_000, 3_000], ..short(3_000) };
    let suite = run_condition_suite(&cfg, 4).unwrap();
    let t = time_to_threshold(&suite, &[1e6]).unwrap();
    assert_eq!(t[0].fraction_reaching, 0.0);
    assert_eq!(t[0].mean_round, None);
    assert!(time_to_threshold(&suite, &[0.0]).is_err());
}

#[test]
fn checkpoints_need_all_conditions() {
    let cfg = TrialConfig { checkpoints: vec![1_000], ..short(1_000) };
    let partial = run_conditions(&cfg, &[Condition::Baseline, Condition::Joint], 2).unwrap();
    assert!(time_to_threshold(&partial, &[5.0]).is_err());
}

#[test]
fn invalid_config_fails_before_running() {
    let bad = TrialConfig { rounds: 0, ..TrialConfig::default() };
    assert!(run_trial(&bad, Condition::Baseline, 0).is_err());
    let bad = TrialConfig { measure_fraction: 1.5, ..TrialConfig::default() };
    assert!(run_condition_suite(&bad, 2).is_err());
    assert!(run_condition_suite(&TrialConfig::default(), 1).is_err());
}
