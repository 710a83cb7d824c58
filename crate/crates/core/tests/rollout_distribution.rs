use phased_reinforce::harness::{random_mdp, random_theta};
use phased_reinforce::policy::softmax_policy;
use phased_reinforce::{sample_batch, SeedSpec};

/// Upper 0.001 quantile of chi-squared with 3 degrees of freedom.
const CHI2_3DF_999: f64 = 16.266;

#[test]
fn first_reward_mean_within_three_sigma() {
    let m = random_mdp(4, 3, 0.9, 5).unwrap();
    let theta = random_theta(4, 3, 6);
    let pi = softmax_policy(&theta);
    let mut mean = 0.0;
    let mut second = 0.0;
    for s in 0..4 {
        for a in 0..3 {
            let p = m.rho()[s] * pi.prob(s, a);
            mean += p * m.reward(s, a);
            second += p * m.reward(s, a).powi(2);
        }
    }
    let sd = (second - mean * mean).sqrt();
    let n = 100_000;
    let trajs = sample_batch(&m, &theta, 1, n, SeedSpec::new(1, 0, 0, 0)).unwrap();
    let empirical = trajs.iter().map(|t| t.rewards[0]).sum::<f64>() / n as f64;
    assert!(
        (empirical - mean).abs() <= 3.0 * sd / (n as f64).sqrt(),
        "{empirical} vs {mean}"
    );
}

#[test]
fn second_state_frequencies_pass_chi_squared() {
    let m = random_mdp(4, 2, 0.9, 9).unwrap();
    let theta = random_theta(4, 2, 10);
    let pi = softmax_policy(&theta);
    let mut expected = [0.0; 4];
    for s in 0..4 {
        for a in 0..2 {
            for (s2, p) in m.next_state_dist(s, a).iter().enumerate() {
                expected[s2] += m.rho()[s] * pi.prob(s, a) * p;
            }
        }
    }
    let n = 100_000;
    let trajs = sample_batch(&m, &theta, 1, n, SeedSpec::new(2, 0, 0, 0)).unwrap();
    let mut counts = [0usize; 4];
    for t in &trajs {
        counts[t.states[1]] += 1;
    }
    let chi2: f64 = (0..4)
        .map(|s| {
            let e = expected[s] * n as f64;
            (counts[s] as f64 - e).powi(2) / e
        })
        .sum();
    assert!(chi2 < CHI2_3DF_999, "chi2 = {chi2}");
}
