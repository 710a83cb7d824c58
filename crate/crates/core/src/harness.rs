//! Experiment configs, built-in environments and result export.
//!
//! Configs are JSON. A run writes into its output directory:
//!
//! - `run.jsonl`: one [`EpisodeLog`] per optimizer step
//! - `regret.csv`: the regret ledger
//! - `average_regret.csv`: `N` against average regret
//! - `log_regret.csv`: `log N` against `log` cumulative regret
//! - `checkpoints.csv`: regret at the configured checkpoints
//! - `summary.json`: totals, constants, final parameters and wall time

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{lemma_constants, reinforce_gradient_with_policy, BoundConstants, EstimatorConfig};
use crate::mdp::{
    exact_regularized_gradient, mismatch_coefficient, policy_value, regularized_objective, solve_optimal, Mdp,
};
use crate::optimizer::{
    run_minibatch, run_phased, run_single, smoothness_constant, uniform_theta, PhasePlan, RunRecord, StepCoefficient,
};
use crate::oracle::{enumerate_with_baseline, finite_difference_gradient, relative_error, BoundCheck};
use crate::policy::{softmax_policy, PolicyParams};
use crate::regret::{
    phase_constants, reinforce_bound_constants, PhaseConstants, RegretLedger, ReinforceBoundConstants,
};
use crate::rollout::{sample_with_policy, SeedSpec};
use crate::table::Table;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "PHASED_REINFORCE_OUT_DIR";

/// Output directory used when neither the command line, the config nor
/// [`OUT_DIR_ENV`] names one.
pub const DEFAULT_OUT_DIR: &str = "runs";

fn default_gamma() -> f64 {
    0.9
}

/// Where the MDP of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Chain {
        states: usize,
        #[serde(default)]
        slip: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Gridworld {
        size: usize,
        #[serde(default)]
        slip: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Random {
        states: usize,
        actions: usize,
        seed: u64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    File {
        path: PathBuf,
    },
}

impl EnvSpec {
    /// Builds the MDP; relative file paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Mdp> {
        match self {
            EnvSpec::Chain { states, slip, gamma } => chain(*states, *slip, *gamma),
            EnvSpec::Gridworld { size, slip, gamma } => gridworld(*size, *slip, *gamma),
            EnvSpec::Random {
                states,
                actions,
                seed,
                gamma,
            } => random_mdp(*states, *actions, *gamma, *seed),
            EnvSpec::File { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                if !full.exists() {
                    return Err(Error::Config(format!("MDP file {} does not exist", full.display())));
                }
                Mdp::load(full)
            }
        }
    }
}

fn check_slip(slip: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&slip) {
        return Err(Error::InvalidParameter(format!("slip must be in [0,1], got {slip}")));
    }
    Ok(())
}

/// `S`-state chain with actions `0 = reset` (back to state 0) and
/// `1 = advance` (to `min(s+1, S-1)`, staying put with probability `slip`).
/// Reward 1 for any action taken in the last state, 0 elsewhere.
pub fn chain(num_states: usize, slip: f64, gamma: f64) -> Result<Mdp> {
    if num_states == 0 {
        return Err(Error::InvalidParameter("chain needs at least one state".into()));
    }
    check_slip(slip)?;
    let ns = num_states;
    let mut transitions = vec![0.0; ns * 2 * ns];
    let mut rewards = Table::zeros(ns, 2);
    for s in 0..ns {
        transitions[(s * 2) * ns] = 1.0;
        let next = (s + 1).min(ns - 1);
        let row = (s * 2 + 1) * ns;
        transitions[row + next] += 1.0 - slip;
        transitions[row + s] += slip;
    }
    rewards.row_mut(ns - 1).fill(1.0);
    Mdp::new(ns, 2, transitions, rewards, gamma, vec![1.0 / ns as f64; ns])
}

/// `size x size` grid, actions up/down/left/right, walls block movement.
/// With probability `slip` the move goes in a uniformly random direction.
/// Reward 1 for any action in the bottom-right corner.
pub fn gridworld(size: usize, slip: f64, gamma: f64) -> Result<Mdp> {
    if size == 0 {
        return Err(Error::InvalidParameter("grid size must be >= 1".into()));
    }
    check_slip(slip)?;
    let ns = size * size;
    let moves: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    let target = |s: usize, d: usize| {
        let (r, c) = ((s / size) as isize, (s % size) as isize);
        let (nr, nc) = (r + moves[d].0, c + moves[d].1);
        if nr < 0 || nc < 0 || nr >= size as isize || nc >= size as isize {
            s
        } else {
            nr as usize * size + nc as usize
        }
    };
    let mut transitions = vec![0.0; ns * 4 * ns];
    let mut rewards = Table::zeros(ns, 4);
    for s in 0..ns {
        for a in 0..4 {
            let row = (s * 4 + a) * ns;
            transitions[row + target(s, a)] += 1.0 - slip;
            for d in 0..4 {
                transitions[row + target(s, d)] += slip / 4.0;
            }
        }
    }
    rewards.row_mut(ns - 1).fill(1.0);
    Mdp::new(ns, 4, transitions, rewards, gamma, vec![1.0 / ns as f64; ns])
}

/// Transition rows from a symmetric Dirichlet(1) (normalized unit
/// exponentials), rewards uniform on `[0, 1]`, uniform `rho`.
pub fn random_mdp(num_states: usize, num_actions: usize, gamma: f64, seed: u64) -> Result<Mdp> {
    if num_states == 0 || num_actions == 0 {
        return Err(Error::InvalidParameter("need at least one state and one action".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, na) = (num_states, num_actions);
    let mut transitions = Vec::with_capacity(ns * na * ns);
    for _ in 0..ns * na {
        let draws: Vec<f64> = (0..ns).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        transitions.extend(draws.iter().map(|x| x / total));
    }
    let unit = Uniform::new_inclusive(0.0, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let rewards = Table::from_vec(ns, na, (0..ns * na).map(|_| unit.sample(&mut rng)).collect())?;
    Mdp::new(ns, na, transitions, rewards, gamma, vec![1.0 / ns as f64; ns])
}

fn parse_param<T: std::str::FromStr>(params: &[(String, String)], key: &str) -> Result<Option<T>> {
    match params.iter().rev().find(|(k, _)| k == key) {
        None => Ok(None),
        Some((_, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("cannot parse parameter {key}={v}"))),
    }
}

/// Environment spec from a builtin name and `key=value` parameters.
pub fn env_from_params(name: &str, params: &[(String, String)]) -> Result<EnvSpec> {
    let allowed: &[&str] = match name {
        "chain" => &["states", "slip", "gamma"],
        "gridworld" => &["size", "slip", "gamma"],
        "random" => &["states", "actions", "seed", "gamma"],
        _ => {
            return Err(Error::Config(format!(
                "unknown environment {name:?}; expected chain, gridworld or random"
            )))
        }
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown parameter {k:?} for {name}")));
    }
    let gamma = parse_param(params, "gamma")?.unwrap_or_else(default_gamma);
    let slip = parse_param(params, "slip")?.unwrap_or(0.0);
    Ok(match name {
        "chain" => EnvSpec::Chain {
            states: parse_param(params, "states")?.unwrap_or(3),
            slip,
            gamma,
        },
        "gridworld" => EnvSpec::Gridworld {
            size: parse_param(params, "size")?.unwrap_or(3),
            slip,
            gamma,
        },
        _ => EnvSpec::Random {
            states: parse_param(params, "states")?.unwrap_or(4),
            actions: parse_param(params, "actions")?.unwrap_or(3),
            seed: parse_param(params, "seed")?.unwrap_or(0),
            gamma,
        },
    })
}

/// Splits `key=value`.
pub fn parse_key_value(text: &str) -> Result<(String, String)> {
    match text.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(format!("expected key=value, got {text:?}"))),
    }
}

/// Generates a builtin environment and writes it as MDP JSON.
pub fn cmd_gen_env(name: &str, params: &[(String, String)], out: &Path) -> Result<Mdp> {
    let m = env_from_params(name, params)?.build(None)?;
    m.save(out)?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Phased,
    Minibatch,
    /// Fixed-`lambda` policy gradient without phases.
    Single,
}

fn default_t0() -> u64 {
    1
}

fn default_batch() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    #[serde(default)]
    pub algorithm: Algorithm,
    pub episodes: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t0")]
    pub t0: u64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_step_coefficient")]
    pub step_coefficient: StepCoefficient,
    #[serde(default)]
    pub epsilon_pp: Option<f64>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub recenter: bool,
    /// Regularization strength of the `single` algorithm; defaults to
    /// `(1 - gamma) / 2`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Global step indices at which regret is snapshotted.
    #[serde(default)]
    pub checkpoints: Vec<u64>,
}

fn default_step_coefficient() -> StepCoefficient {
    StepCoefficient::Largest
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if !trimmed.starts_with('{') {
            return Err(Error::Config(
                "configs are JSON objects; convert key = value files to JSON first".into(),
            ));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "toml") {
            return Err(Error::Config(format!(
                "{}: TOML configs are not read; write the same keys as JSON",
                path.display()
            )));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn plan(&self, m: &Mdp) -> PhasePlan {
        PhasePlan {
            t0: self.t0,
            step_coefficient: self.step_coefficient,
            epsilon_pp: self.epsilon_pp,
            estimator: self.estimator.clone(),
            batch: self.batch,
            recenter: self.recenter,
            ..PhasePlan::for_mdp(m)
        }
    }

    pub fn validate(&self, m: &Mdp) -> Result<()> {
        self.plan(m).validate()?;
        if self.algorithm != Algorithm::Minibatch && self.batch != 1 {
            return Err(Error::Config("batch > 1 requires the minibatch algorithm".into()));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(Error::Config(format!("lambda must be >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub episodes: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.episodes {
            cfg.episodes = n;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = Some(d.clone());
        }
    }
}

/// Config value, then [`OUT_DIR_ENV`], then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir
        .clone()
        .or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub cumulative_regret: f64,
    pub average_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub f_star: f64,
    pub mismatch: f64,
    pub total_episodes: u64,
    pub steps: u64,
    pub cumulative_regret: f64,
    pub average_regret: f64,
    pub final_value: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Log-log slope over the checkpoints, when there are at least two.
    pub regret_slope: Option<f64>,
    pub lemma_constants: BoundConstants,
    pub reinforce_bound: ReinforceBoundConstants,
    pub phase_constants: Vec<PhaseConstants>,
    pub final_theta: PolicyParams,
    pub wall_time_secs: f64,
}

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub ledger: RegretLedger,
    pub summary: RunSummary,
}

/// Runs one experiment in memory.
pub fn execute(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<RunOutput> {
    let start = Instant::now();
    let m = cfg.env.build(base)?;
    cfg.validate(&m)?;
    let plan = cfg.plan(&m);
    let theta0 = uniform_theta(&m);
    let record = match cfg.algorithm {
        Algorithm::Phased => run_phased(&m, &theta0, &plan, cfg.episodes, cfg.seed)?,
        Algorithm::Minibatch => run_minibatch(&m, &theta0, &plan, cfg.episodes, cfg.seed)?,
        Algorithm::Single => {
            let lambda = cfg.lambda.unwrap_or(plan.lambda_bar());
            run_single(&m, &theta0, lambda, cfg.episodes, &plan, cfg.seed)?
        }
    };
    let (_, f_star) = solve_optimal(&m)?;
    let mismatch = mismatch_coefficient(&m)?;
    let ledger = RegretLedger::from_record(&record, f_star);

    let series = ledger.cumulative_series();
    let episodes_at = |n: u64| -> u64 { record.steps[..=n as usize].iter().map(|s| s.episodes as u64).sum() };
    let mut checkpoints = Vec::new();
    for &n in &cfg.checkpoints {
        if n < series.len() as u64 {
            let total = series[n as usize];
            checkpoints.push(Checkpoint {
                n,
                cumulative_regret: total,
                average_regret: total / episodes_at(n) as f64,
            });
        }
    }
    let regret_slope = if checkpoints.len() >= 2 {
        let ns: Vec<u64> = checkpoints.iter().map(|c| c.n).collect();
        ledger.average_regret_slope(&ns).ok()
    } else {
        None
    };

    let lambda_bar = plan.lambda_bar();
    let consts = lemma_constants(m.gamma(), lambda_bar, plan.estimator.baseline_bound, plan.batch)?;
    let reinforce_bound = reinforce_bound_constants(
        m.gamma(),
        m.num_states(),
        m.num_actions(),
        plan.estimator.baseline_bound,
        consts.vbar_upper,
    );
    // After post-processing pi >= eps_pp, so F* - L_lambda <= 1/(1-g) + lambda log(1/eps_pp).
    let phases = record.steps.last().map_or(0, |s| s.l + 1);
    let phase_consts = (0..phases)
        .map(|l| {
            let gap = 1.0 / (1.0 - m.gamma()) - plan.lambda(l) * plan.epsilon_pp().ln();
            phase_constants(&plan, &consts, l, gap)
        })
        .collect();

    let cumulative_regret = series.last().copied().unwrap_or(0.0);
    let total_episodes = record.steps.iter().map(|s| s.episodes as u64).sum::<u64>();
    let final_value = policy_value(&m, &softmax_policy(&record.final_theta))?.value;
    let summary = RunSummary {
        config: cfg.clone(),
        num_states: m.num_states(),
        num_actions: m.num_actions(),
        gamma: m.gamma(),
        f_star,
        mismatch,
        total_episodes,
        steps: record.steps.len() as u64,
        cumulative_regret,
        average_regret: if total_episodes == 0 {
            0.0
        } else {
            cumulative_regret / total_episodes as f64
        },
        final_value,
        checkpoints,
        regret_slope,
        lemma_constants: consts,
        reinforce_bound,
        phase_constants: phase_consts,
        final_theta: record.final_theta.clone(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        record,
        ledger,
        summary,
    })
}

/// Writes all run artifacts into `dir`, creating it if needed.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("run.jsonl"))?);
    for step in &out.record.steps {
        serde_json::to_writer(&mut w, step)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    out.ledger
        .write_csv(BufWriter::new(File::create(dir.join("regret.csv"))?))?;

    let series = out.ledger.cumulative_series();
    let mut avg = BufWriter::new(File::create(dir.join("average_regret.csv"))?);
    let mut log = BufWriter::new(File::create(dir.join("log_regret.csv"))?);
    writeln!(avg, "N,average_regret")?;
    writeln!(log, "log_N,log_regret")?;
    let mut episodes = 0u64;
    for (step, total) in out.record.steps.iter().zip(&series) {
        episodes += step.episodes as u64;
        writeln!(avg, "{episodes},{}", total / episodes as f64)?;
        if *total > 0.0 {
            writeln!(log, "{},{}", (episodes as f64).ln(), total.ln())?;
        }
    }
    avg.flush()?;
    log.flush()?;

    let mut cp = BufWriter::new(File::create(dir.join("checkpoints.csv"))?);
    writeln!(cp, "n,cumulative_regret,average_regret")?;
    for c in &out.summary.checkpoints {
        writeln!(cp, "{},{},{}", c.n, c.cumulative_regret, c.average_regret)?;
    }
    cp.flush()?;

    let mut text = serde_json::to_string_pretty(&out.summary)?;
    text.push('\n');
    std::fs::write(dir.join("summary.json"), text)?;
    Ok(())
}

/// `run <config>`: executes the experiment and writes its artifacts.
/// Returns the output directory.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<(PathBuf, RunSummary)> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut cfg);
    let out = execute(&cfg, config_path.parent())?;
    let dir = resolve_out_dir(&cfg);
    write_outputs(&out, &dir)?;
    Ok((dir, out.summary))
}

/// Knobs of the `check` suite.
#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Horizons for the enumeration checks; too-large ones are skipped.
    pub horizons: Vec<usize>,
    pub norm_samples: u64,
    pub fd_step: f64,
    pub fd_tolerance: f64,
    /// Atom budget per enumeration.
    pub max_atoms: f64,
    /// Scale every bound's right side by this factor. Values below 1 are a
    /// negative control: a correct suite must then fail.
    pub constant_scale: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            horizons: vec![2, 3, 4],
            norm_samples: 2000,
            fd_step: 1e-5,
            fd_tolerance: 1e-4,
            max_atoms: 1e6,
            constant_scale: 1.0,
        }
    }
}

/// Slack on exact inequalities for floating-point round-off.
pub const BOUND_SLACK: f64 = 1e-9;

/// Seeded parameters with entries uniform on `[-2, 2]`.
pub fn random_theta(num_states: usize, num_actions: usize, seed: u64) -> PolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(-2.0, 2.0).expect("valid range");
    let data = (0..num_states * num_actions).map(|_| unit.sample(&mut rng)).collect();
    PolicyParams::new(Table::from_vec(num_states, num_actions, data).expect("shape")).expect("finite")
}

/// Exact gradient ascent on `L_lambda` from uniform parameters until
/// `||grad L|| <= lambda/(2SA)` or `max_iters`. The step doubles after an
/// improving step and halves otherwise, never dropping below
/// `1/beta_lambda`. Returns the stopping point and whether the threshold was
/// reached.
pub fn ascend_to_stationarity(m: &Mdp, lambda: f64, max_iters: usize) -> Result<(PolicyParams, bool)> {
    let (s, a) = (m.num_states() as f64, m.num_actions() as f64);
    let threshold = lambda / (2.0 * s * a);
    let min_step = 1.0 / smoothness_constant(m.gamma(), lambda, m.num_states())?;
    let mut step = 1.0;
    let mut theta = uniform_theta(m);
    let mut value = regularized_objective(m, &theta, lambda)?;
    for _ in 0..max_iters {
        let g = exact_regularized_gradient(m, &theta, lambda)?;
        if g.norm() <= threshold {
            return Ok((theta, true));
        }
        loop {
            let trial = crate::optimizer::ascent_step(&theta, step, &g);
            let v = regularized_objective(m, &trial, lambda)?;
            if v >= value || step <= min_step {
                theta = trial;
                value = v;
                step *= 2.0;
                break;
            }
            step = (step / 2.0).max(min_step);
        }
    }
    let g = exact_regularized_gradient(m, &theta, lambda)?;
    Ok((theta.clone(), g.norm() <= threshold))
}

/// Runs every oracle suite on the configured environment.
pub fn run_checks(m: &Mdp, estimator: &EstimatorConfig, seed: u64, opts: &CheckOptions) -> Result<Vec<BoundCheck>> {
    estimator.validate(m.num_states())?;
    let scale = opts.constant_scale;
    let gamma = m.gamma();
    let lambda = (1.0 - gamma) / 2.0;
    let (ns, na) = (m.num_states(), m.num_actions());
    let baseline = estimator.baseline_values(ns, None);
    let consts = lemma_constants(gamma, lambda, estimator.baseline_bound, 1)?;
    let thetas = [uniform_theta(m), random_theta(ns, na, seed)];
    let mut checks = Vec::new();

    let mut fd_err: f64 = 0.0;
    for theta in &thetas {
        for lam in [0.0, lambda] {
            let exact = exact_regularized_gradient(m, theta, lam)?;
            let fd = finite_difference_gradient(m, theta, lam, opts.fd_step)?;
            fd_err = fd_err.max(relative_error(&exact, &fd, 1e-8));
        }
    }
    checks.push(BoundCheck::new(
        "exact gradient vs finite differences",
        fd_err,
        opts.fd_tolerance * scale,
    ));

    for &h in &opts.horizons {
        let atoms = ((ns * na) as f64).powi(h as i32 + 1);
        if atoms > opts.max_atoms {
            continue;
        }
        let mut bias: f64 = 0.0;
        let mut moment_excess = f64::NEG_INFINITY;
        for theta in &thetas {
            let exact = exact_regularized_gradient(m, theta, lambda)?;
            let report = enumerate_with_baseline(m, theta, lambda, estimator.beta, &baseline, h)?;
            bias = bias.max(report.mean_gradient.sub(&exact).norm());
            let rhs = consts.second_moment_bound(exact.norm_sq()) * scale;
            moment_excess = moment_excess.max(report.second_moment - rhs);
        }
        checks.push(BoundCheck::new(
            format!("bias bound (H = {h})"),
            bias,
            consts.bias_bound(estimator.beta, h) * scale + BOUND_SLACK,
        ));
        checks.push(BoundCheck::new(
            format!("second moment minus bound (H = {h})"),
            moment_excess,
            BOUND_SLACK,
        ));
    }

    let mut max_norm: f64 = 0.0;
    for (j, theta) in thetas.iter().enumerate() {
        let pi = softmax_policy(theta);
        let horizon = opts.horizons.iter().copied().max().unwrap_or(4);
        for i in 0..opts.norm_samples {
            let traj = sample_with_policy(m, &pi, horizon, SeedSpec::new(seed, j as u64, i, 0));
            let g = reinforce_gradient_with_policy(&traj, &pi, lambda, gamma, estimator.beta, &baseline);
            max_norm = max_norm.max(g.norm());
        }
    }
    checks.push(BoundCheck::new(
        "estimate norm",
        max_norm,
        consts.c1 * scale + BOUND_SLACK,
    ));

    let mismatch = mismatch_coefficient(m)?;
    let (_, f_star) = solve_optimal(m)?;
    let (theta, reached) = ascend_to_stationarity(m, lambda, 10_000)?;
    if reached {
        let value = policy_value(m, &softmax_policy(&theta))?.value;
        checks.push(BoundCheck::new(
            "near-stationary suboptimality",
            f_star - value,
            2.0 * lambda / (1.0 - gamma) * mismatch * scale + BOUND_SLACK,
        ));
    } else {
        checks.push(BoundCheck {
            name: "near-stationary suboptimality (threshold not reached)".into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            passed: false,
        });
    }
    Ok(checks)
}

/// `check <config>`: prints every bound and returns whether all passed.
pub fn cmd_check<W: Write>(config_path: &Path, seed: Option<u64>, opts: &CheckOptions, mut out: W) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let m = cfg.env.build(config_path.parent())?;
    cfg.estimator.validate(m.num_states())?;
    let checks = run_checks(&m, &cfg.estimator, cfg.seed, opts)?;
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        writeln!(out, "all {} checks passed", checks.len())?;
    } else {
        writeln!(out, "failed: {}", failed.join(", "))?;
    }
    Ok(failed.is_empty())
}
