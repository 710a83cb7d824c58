#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phased_reinforce::harness::{self, CheckOptions, Overrides};

#[derive(Parser)]
#[command(name = "phased-reinforce", version, about = "Phased REINFORCE on tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<u64>,
        /// Defaults to the config value, then $PHASED_REINFORCE_OUT_DIR, then ./runs
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check every estimator bound on the configured instance
    Check {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiply every bound by this factor (negative control when < 1)
        #[arg(long, default_value_t = 1.0, hide = true)]
        constant_scale: f64,
    },
    /// Write a builtin environment as MDP JSON
    GenEnv {
        /// chain, gridworld or random
        name: String,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> phased_reinforce::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            seed,
            episodes,
            out_dir,
        } => {
            let overrides = Overrides {
                seed,
                episodes,
                out_dir,
            };
            let (dir, summary) = harness::cmd_run(&config, &overrides)?;
            println!(
                "{} steps, {} episodes, cumulative regret {:.6}, average regret {:.6}",
                summary.steps, summary.total_episodes, summary.cumulative_regret, summary.average_regret
            );
            println!("wrote {}", dir.display());
            Ok(true)
        }
        Command::Check {
            config,
            seed,
            constant_scale,
        } => {
            let opts = CheckOptions {
                constant_scale,
                ..CheckOptions::default()
            };
            harness::cmd_check(&config, seed, &opts, std::io::stdout())
        }
        Command::GenEnv { name, params, out } => {
            let params = params
                .iter()
                .map(|p| harness::parse_key_value(p))
                .collect::<phased_reinforce::Result<Vec<_>>>()?;
            let m = harness::cmd_gen_env(&name, &params, &out)?;
            println!(
                "wrote {} ({} states, {} actions)",
                out.display(),
                m.num_states(),
                m.num_actions()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
