//! Builds the builtin environments, writes them as MDP JSON to the system
//! temp directory and reads them back.
//!
//! cargo run --example generate_envs

use phased_reinforce::harness::{cmd_gen_env, parse_key_value};
use phased_reinforce::mdp::{mismatch_coefficient, solve_optimal};
use phased_reinforce::Mdp;

fn main() -> phased_reinforce::Result<()> {
    let dir = std::env::temp_dir();
    for (name, params) in [
        ("chain", vec!["states=5", "slip=0.1"]),
        ("gridworld", vec!["size=3"]),
        ("random", vec!["states=4", "actions=3", "seed=1"]),
    ] {
        let params = params.into_iter().map(parse_key_value).collect::<Result<Vec<_>, _>>()?;
        let path = dir.join(format!("{name}.json"));
        let m = cmd_gen_env(name, &params, &path)?;
        let back = Mdp::load(&path)?;
        let (_, f_star) = solve_optimal(&back)?;
        println!(
            "{name:<9} S = {:<2} A = {} F* = {:<8.4} mismatch = {:<6.3} round trip: {}  ({})",
            m.num_states(),
            m.num_actions(),
            f_star,
            mismatch_coefficient(&back)?,
            back == m,
            path.display()
        );
    }
    Ok(())
}
