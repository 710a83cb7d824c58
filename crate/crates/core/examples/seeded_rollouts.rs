//! Counter-based trajectory streams: a parallel batch equals the same
//! trajectories sampled one by one, and each can be dumped as JSONL.
//!
//! cargo run --example seeded_rollouts

use phased_reinforce::harness::gridworld;
use phased_reinforce::rollout::{write_jsonl, TrajectoryRecord};
use phased_reinforce::{horizon_schedule, sample_batch, sample_trajectory, PolicyParams, SeedSpec};

fn main() -> phased_reinforce::Result<()> {
    let m = gridworld(3, 0.1, 0.9)?;
    let theta = PolicyParams::zeros(m.num_states(), m.num_actions());
    let horizon = horizon_schedule(0, m.gamma(), 0.5)?;
    let seed = SeedSpec::new(2024, 0, 0, 0);
    let batch = sample_batch(&m, &theta, horizon, 64, seed)?;
    let same = (0..64).all(|i| batch[i] == sample_trajectory(&m, &theta, horizon, seed.with_index(i as u64)));
    println!("horizon {horizon}, parallel batch == sequential: {same}");

    let short: Vec<_> = (0..3)
        .map(|i| {
            let s = seed.with_index(i);
            TrajectoryRecord::new(s, &sample_trajectory(&m, &theta, 4, s))
        })
        .collect();
    write_jsonl(std::io::stdout().lock(), &short)
}
