//! Exact policy evaluation, optimal control and the exact regularized
//! gradient on a random MDP, cross-checked against finite differences.
//!
//! cargo run --example exact_oracles

use phased_reinforce::harness::{random_mdp, random_theta};
use phased_reinforce::mdp::{exact_regularized_gradient, mismatch_coefficient, policy_value, solve_optimal};
use phased_reinforce::oracle::{relative_error, two_scale_gradient};
use phased_reinforce::policy::softmax_policy;

fn main() -> phased_reinforce::Result<()> {
    let m = random_mdp(4, 3, 0.9, 1)?;
    let theta = random_theta(4, 3, 2);
    let report = policy_value(&m, &softmax_policy(&theta))?;
    let (pi_star, f_star) = solve_optimal(&m)?;
    println!("F(pi_theta) = {:.6}", report.value);
    println!(
        "F*          = {f_star:.6}  (greedy actions {:?})",
        pi_star.argmax_actions()
    );
    println!("mismatch    = {:.4}", mismatch_coefficient(&m)?);

    for lambda in [0.0, 0.1] {
        let exact = exact_regularized_gradient(&m, &theta, lambda)?;
        let fd = two_scale_gradient(&m, &theta, lambda, 1e-5)?;
        println!(
            "lambda = {lambda}: |grad| = {:.5}, rel. error vs FD = {:.2e}, FD h vs h/2 = {:.2e}",
            exact.norm(),
            relative_error(&exact, &fd.fine, 1e-12),
            fd.disagreement
        );
    }
    Ok(())
}
