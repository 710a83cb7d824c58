//! The phased schedule and one phased run on the 3-state chain.
//!
//! cargo run --release --example phased_run

use phased_reinforce::harness::chain;
use phased_reinforce::mdp::solve_optimal;
use phased_reinforce::optimizer::{schedule_table, uniform_theta};
use phased_reinforce::{run_phased, PhasePlan, RegretLedger};

fn main() -> phased_reinforce::Result<()> {
    let m = chain(3, 0.0, 0.9)?;
    let plan = PhasePlan::for_mdp(&m);
    println!("l   T_l   eps_l     lambda_l   C window");
    for row in schedule_table(&plan, 8) {
        println!(
            "{:<3} {:<5} {:<9.5} {:<10.6} [{:.6e}, {:.6e}]",
            row.l, row.phase_length, row.epsilon, row.lambda, row.step_coefficient_min, row.step_coefficient_max
        );
    }

    let record = run_phased(&m, &uniform_theta(&m), &plan, 1023, 11)?;
    let (_, f_star) = solve_optimal(&m)?;
    let ledger = RegretLedger::from_record(&record, f_star);
    for step in record.steps.iter().filter(|s| s.k == 0) {
        println!(
            "phase {:<2} starts at n = {:<4} F = {:.5} min pi = {:.4}",
            step.l, step.n, step.value, step.min_prob
        );
    }
    println!(
        "cumulative regret after {} episodes: {:.3}",
        ledger.len(),
        ledger.cumulative_regret(1022)?
    );
    Ok(())
}
