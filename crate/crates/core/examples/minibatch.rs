//! Mini-batch phased REINFORCE: M = 1 reproduces the single-trajectory run,
//! larger M averages estimates and is charged M episodes per step.
//!
//! cargo run --release --example minibatch

use phased_reinforce::harness::chain;
use phased_reinforce::mdp::solve_optimal;
use phased_reinforce::optimizer::uniform_theta;
use phased_reinforce::{run_minibatch, run_phased, PhasePlan, RegretLedger};

fn main() -> phased_reinforce::Result<()> {
    let m = chain(3, 0.1, 0.9)?;
    let (_, f_star) = solve_optimal(&m)?;
    let theta0 = uniform_theta(&m);
    let plan = PhasePlan::for_mdp(&m);
    let single = run_phased(&m, &theta0, &plan, 200, 3)?;
    let one = run_minibatch(
        &m,
        &theta0,
        &PhasePlan {
            batch: 1,
            ..plan.clone()
        },
        200,
        3,
    )?;
    println!("M = 1 identical to phased run: {}", one == single);

    for batch in [2, 4, 8] {
        let record = run_minibatch(&m, &theta0, &PhasePlan { batch, ..plan.clone() }, 202, 3)?;
        let ledger = RegretLedger::from_record(&record, f_star);
        println!(
            "M = {batch}: {} steps, regret over 202 episodes = {:.3}",
            record.steps.len(),
            ledger.minibatch_regret_episodes(202, batch)?
        );
    }
    Ok(())
}
