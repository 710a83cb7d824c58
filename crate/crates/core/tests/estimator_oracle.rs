use phased_reinforce::harness::{random_mdp, random_theta};
use phased_reinforce::mdp::exact_regularized_gradient;
use phased_reinforce::oracle::{check_second_moment, enumerate_estimator, enumerate_with_baseline};
use phased_reinforce::{
    lemma_constants, reinforce_gradient, sample_trajectory, Baseline, EstimatorConfig, PolicyParams, SeedSpec,
};

#[test]
fn enumerated_mean_converges_to_exact_gradient() {
    let m = random_mdp(2, 2, 0.5, 21).unwrap();
    let theta = random_theta(2, 2, 22);
    let exact = exact_regularized_gradient(&m, &theta, 0.1).unwrap();
    let cfg = EstimatorConfig::default();
    let consts = lemma_constants(0.5, 0.1, 0.0, 1).unwrap();
    let mut last = f64::INFINITY;
    for h in [2, 4, 6, 8] {
        let r = enumerate_estimator(&m, &theta, 0.1, &cfg, h).unwrap();
        let bias = r.mean_gradient.sub(&exact).norm();
        assert!(bias <= consts.bias_bound(0.5, h) + 1e-9);
        assert!(bias <= last + 1e-12);
        last = bias;
    }
    assert!(last < 5e-3);
}

#[test]
fn per_state_and_running_baselines_keep_the_mean() {
    let m = random_mdp(2, 3, 0.6, 3).unwrap();
    let theta = random_theta(2, 3, 4);
    let zero = enumerate_with_baseline(&m, &theta, 0.05, 0.5, &[0.0, 0.0], 3).unwrap();
    let per_state = enumerate_with_baseline(&m, &theta, 0.05, 0.5, &[1.5, -0.4], 3).unwrap();
    assert!(per_state.mean_gradient.sub(&zero.mean_gradient).max_abs() <= 1e-10);
    let cfg = EstimatorConfig {
        baseline: Baseline::ReinforcementAverage,
        baseline_bound: 2.0,
        ..EstimatorConfig::default()
    };
    let running = enumerate_estimator(&m, &theta, 0.05, &cfg, 3).unwrap();
    assert_eq!(running.mean_gradient, zero.mean_gradient);
}

#[test]
fn sampled_norms_respect_bound_with_baseline() {
    let m = random_mdp(3, 2, 0.8, 8).unwrap();
    let b = [0.9, -0.9, 0.3];
    let consts = lemma_constants(0.8, 0.1, 0.9, 1).unwrap();
    for j in 0..20 {
        let theta = random_theta(3, 2, 100 + j);
        for i in 0..200 {
            let t = sample_trajectory(&m, &theta, 30, SeedSpec::new(7, j, i, 0));
            let g = reinforce_gradient(&t, &theta, 0.1, 0.8, 0.5, &b).unwrap();
            assert!(g.norm() <= consts.c1);
        }
    }
}

#[test]
fn extreme_policies_stay_within_moment_bound() {
    let m = random_mdp(2, 2, 0.9, 30).unwrap();
    let consts = lemma_constants(0.9, 0.05, 0.0, 1).unwrap();
    for scale in [0.0, 5.0, 30.0] {
        let mut theta = random_theta(2, 2, 31);
        let t = theta.table().clone();
        theta = PolicyParams::new({
            let mut x = t;
            x.scale(scale);
            x
        })
        .unwrap();
        let exact = exact_regularized_gradient(&m, &theta, 0.05).unwrap();
        let r = enumerate_estimator(&m, &theta, 0.05, &EstimatorConfig::default(), 4).unwrap();
        assert!((r.total_probability - 1.0).abs() < 1e-12);
        assert!(check_second_moment(&r, &exact, &consts));
    }
}
