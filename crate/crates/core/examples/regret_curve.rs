//! Regret of phased REINFORCE on the 3-state chain for several seeds.
//!
//! cargo run --release --example regret_curve

use phased_reinforce::harness::chain;
use phased_reinforce::mdp::solve_optimal;
use phased_reinforce::optimizer::uniform_theta;
use phased_reinforce::{run_phased, PhasePlan, RegretLedger};

fn main() -> phased_reinforce::Result<()> {
    let m = chain(3, 0.0, 0.9)?;
    let plan = PhasePlan::for_mdp(&m);
    let (_, f_star) = solve_optimal(&m)?;
    let n = 1u64 << 13;
    let checkpoints: Vec<u64> = (10..=13).map(|j| (1u64 << j) - 1).collect();
    println!("seed  avg@2^7     avg@2^13    slope[2^10,2^13]");
    for seed in 0..5 {
        let record = run_phased(&m, &uniform_theta(&m), &plan, n, seed)?;
        let ledger = RegretLedger::from_record(&record, f_star);
        let early = ledger.cumulative_regret((1 << 7) - 1)? / 128.0;
        let late = ledger.cumulative_regret(n - 1)? / n as f64;
        let slope = ledger.average_regret_slope(&checkpoints)?;
        println!("{seed:<5} {early:<11.6} {late:<11.6} {slope:.4}");
    }
    Ok(())
}
