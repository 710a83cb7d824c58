//! Exact moments of the REINFORCE estimate by enumerating every trajectory,
//! compared with the bias, second-moment and baseline properties.
//!
//! cargo run --example estimator_bounds

use phased_reinforce::harness::random_mdp;
use phased_reinforce::mdp::exact_regularized_gradient;
use phased_reinforce::oracle::{check_second_moment, enumerate_estimator};
use phased_reinforce::{lemma_constants, Baseline, EstimatorConfig, PolicyParams, Table};

fn main() -> phased_reinforce::Result<()> {
    let m = random_mdp(2, 2, 0.5, 3)?;
    let theta = PolicyParams::new(Table::from_rows(&[vec![0.4, -0.3], vec![-1.0, 0.8]])?)?;
    let lambda = 0.1;
    let exact = exact_regularized_gradient(&m, &theta, lambda)?;
    let consts = lemma_constants(m.gamma(), lambda, 0.7, 1)?;
    let plain = EstimatorConfig::default();
    let shifted = EstimatorConfig {
        baseline: Baseline::Constant { value: 0.7 },
        baseline_bound: 0.7,
        ..plain.clone()
    };

    println!("H  atoms  bias        bound       E|g|^2      M1+M2|grad|^2  baseline shift");
    for h in 2..=6 {
        let r = enumerate_estimator(&m, &theta, lambda, &plain, h)?;
        let rb = enumerate_estimator(&m, &theta, lambda, &shifted, h)?;
        println!(
            "{h}  {:<5}  {:<10.4e}  {:<10.4e}  {:<10.4}  {:<13.4}  {:.1e}  {}",
            r.atoms,
            r.mean_gradient.sub(&exact).norm(),
            consts.bias_bound(plain.beta, h),
            r.second_moment,
            consts.second_moment_bound(exact.norm_sq()),
            rb.mean_gradient.sub(&r.mean_gradient).max_abs(),
            if check_second_moment(&r, &exact, &consts) {
                "ok"
            } else {
                "VIOLATED"
            }
        );
    }
    Ok(())
}
