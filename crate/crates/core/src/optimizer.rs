//! Stochastic gradient ascent loops: single-trajectory, phased with the
//! doubling trick, and mini-batch phased.
//!
//! Phase `l` runs `T_l = 2^l T0` steps with regularization
//! `lambda_l = eps_l (1 - gamma) / 2`, `eps_l = T_l^{-1/6}`, and step sizes
//! `alpha_{l,k} = C_{l,alpha} / (sqrt(k+3) log2(k+3))`. Every phase starts
//! from a post-processed iterate whose action probabilities are all at
//! least `eps_pp`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{minibatch_gradient, BaselineTracker, EstimatorConfig};
use crate::mdp::{exact_regularized_gradient, policy_value, truncated_value, Mdp};
use crate::policy::{post_process, recenter, softmax_policy, PolicyParams, PostProcessConfig};
use crate::rollout::{horizon_schedule, sample_batch, SeedSpec};
use crate::table::Table;

/// `B_T(l, k) = sum_{j<l} T_j + k` for `T_j = 2^j T0`.
pub fn index_to_global(l: u32, k: u64, t0: u64) -> Result<u64> {
    let phase_len = phase_length(l, t0)?;
    if k >= phase_len {
        return Err(Error::OutOfRange(format!(
            "episode {k} outside phase {l} of length {phase_len}"
        )));
    }
    Ok(((1u64 << l) - 1) * t0 + k)
}

/// Inverse of [`index_to_global`].
pub fn global_to_index(n: u64, t0: u64) -> Result<(u32, u64)> {
    if t0 == 0 {
        return Err(Error::InvalidParameter("T0 must be >= 1".into()));
    }
    let mut l = 0u32;
    let mut start = 0u64;
    loop {
        let len = phase_length(l, t0)?;
        if n < start + len {
            return Ok((l, n - start));
        }
        start += len;
        l += 1;
    }
}

fn phase_length(l: u32, t0: u64) -> Result<u64> {
    if t0 == 0 {
        return Err(Error::InvalidParameter("T0 must be >= 1".into()));
    }
    1u64.checked_shl(l)
        .and_then(|p| p.checked_mul(t0))
        .ok_or_else(|| Error::OutOfRange(format!("phase {l} length overflows")))
}

/// Smoothness constant `beta_lambda = 8/(1-gamma)^3 + 2 lambda / S` of `L_lambda`.
pub fn smoothness_constant(gamma: f64, lambda: f64, num_states: usize) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) || !(lambda >= 0.0) || num_states == 0 {
        return Err(Error::InvalidParameter(format!(
            "need gamma in (0,1), lambda >= 0, S >= 1; got {gamma}, {lambda}, {num_states}"
        )));
    }
    Ok(8.0 / (1.0 - gamma).powi(3) + 2.0 * lambda / num_states as f64)
}

/// `1 / (sqrt(k+3) log2(k+3))`
pub fn step_decay(k: u64) -> f64 {
    let x = k as f64 + 3.0;
    1.0 / (x.sqrt() * x.log2())
}

/// How `C_{l,alpha}` is picked inside its admissible window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StepCoefficient {
    /// `1 / (2 beta_{lambda_l})`, the upper end of the window.
    Largest,
    /// `1 / (2 beta_{lambda_bar})`, the lower end.
    Smallest,
    Fixed(f64),
}

/// Full hyper-parameter schedule of the phased method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub gamma: f64,
    pub num_states: usize,
    pub num_actions: usize,
    /// Length of phase 0.
    pub t0: u64,
    pub step_coefficient: StepCoefficient,
    /// Defaults to `1 / (2A)`.
    pub epsilon_pp: Option<f64>,
    pub estimator: EstimatorConfig,
    pub batch: usize,
    /// Row-center theta after every update. Off by default.
    pub recenter: bool,
}

impl PhasePlan {
    /// The schedule with `T0 = 1`, largest admissible step coefficient,
    /// `eps_pp = 1/(2A)`, `beta = 1/2`, no baseline and single trajectories.
    pub fn new(gamma: f64, num_states: usize, num_actions: usize) -> Self {
        Self {
            gamma,
            num_states,
            num_actions,
            t0: 1,
            step_coefficient: StepCoefficient::Largest,
            epsilon_pp: None,
            estimator: EstimatorConfig::default(),
            batch: 1,
            recenter: false,
        }
    }

    pub fn for_mdp(m: &Mdp) -> Self {
        Self::new(m.gamma(), m.num_states(), m.num_actions())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be in (0,1), got {}",
                self.gamma
            )));
        }
        if self.num_states == 0 || self.num_actions == 0 {
            return Err(Error::InvalidParameter("S and A must be >= 1".into()));
        }
        if self.t0 == 0 {
            return Err(Error::InvalidParameter("T0 must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        self.post_process_config()?;
        self.estimator.validate(self.num_states)?;
        if let StepCoefficient::Fixed(c) = self.step_coefficient {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "step coefficient must be > 0, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn phase_length(&self, l: u32) -> u64 {
        (1u64 << l) * self.t0
    }

    /// `eps_l = T_l^{-1/6}`
    pub fn epsilon(&self, l: u32) -> f64 {
        (self.phase_length(l) as f64).powf(-1.0 / 6.0)
    }

    pub fn lambda(&self, l: u32) -> f64 {
        self.epsilon(l) * (1.0 - self.gamma) / 2.0
    }

    pub fn lambda_bar(&self) -> f64 {
        (1.0 - self.gamma) / 2.0
    }

    pub fn epsilon_pp(&self) -> f64 {
        self.epsilon_pp.unwrap_or(1.0 / (2.0 * self.num_actions as f64))
    }

    pub fn post_process_config(&self) -> Result<PostProcessConfig> {
        PostProcessConfig::new(self.epsilon_pp(), self.num_actions)
    }

    fn beta(&self, lambda: f64) -> f64 {
        8.0 / (1.0 - self.gamma).powi(3) + 2.0 * lambda / self.num_states as f64
    }

    /// Admissible `[1/(2 beta_{lambda_bar}), 1/(2 beta_{lambda_l})]`.
    pub fn step_coefficient_window(&self, l: u32) -> (f64, f64) {
        (
            1.0 / (2.0 * self.beta(self.lambda_bar())),
            1.0 / (2.0 * self.beta(self.lambda(l))),
        )
    }

    pub fn step_coefficient(&self, l: u32) -> f64 {
        let (lo, hi) = self.step_coefficient_window(l);
        match self.step_coefficient {
            StepCoefficient::Largest => hi,
            StepCoefficient::Smallest => lo,
            StepCoefficient::Fixed(c) => c,
        }
    }

    pub fn step_size(&self, l: u32, k: u64) -> f64 {
        self.step_coefficient(l) * step_decay(k)
    }
}

/// One optimizer step. For mini-batch runs a step consumes `episodes`
/// trajectories; the final step of a run may be partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    /// Global step index `B_T(l, k)`.
    pub n: u64,
    pub l: u32,
    pub k: u64,
    /// Episodes played at this step (`M`, or fewer for a trailing partial step).
    pub episodes: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub alpha: f64,
    /// Norm of the (averaged) sampled gradient.
    pub grad_norm: f64,
    /// Exact `||grad L_lambda(theta)||`.
    pub exact_grad_norm: f64,
    /// Truncated value `F_hat` at this step's horizon.
    pub truncated_value: f64,
    pub value: f64,
    pub min_prob: f64,
    /// Whether the update was applied (false only for a partial step).
    pub updated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub master_seed: u64,
    pub t0: u64,
    pub batch: usize,
    pub gamma: f64,
    pub total_episodes: u64,
    pub initial_theta: PolicyParams,
    pub final_theta: PolicyParams,
    pub steps: Vec<EpisodeLog>,
}

impl RunRecord {
    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.lambda)
    }
}

struct StepStats {
    exact_grad_norm: f64,
    truncated_value: f64,
    value: f64,
    min_prob: f64,
}

fn step_stats(m: &Mdp, theta: &PolicyParams, lambda: f64, horizon: usize) -> Result<StepStats> {
    let pi = softmax_policy(theta);
    Ok(StepStats {
        exact_grad_norm: exact_regularized_gradient(m, theta, lambda)?.norm(),
        truncated_value: truncated_value(m, &pi, horizon)?,
        value: policy_value(m, &pi)?.value,
        min_prob: pi.table().as_slice().iter().copied().fold(f64::INFINITY, f64::min),
    })
}

fn check_shapes(m: &Mdp, theta: &PolicyParams) -> Result<()> {
    if theta.num_states() != m.num_states() || theta.num_actions() != m.num_actions() {
        return Err(Error::InvalidParameter(format!(
            "theta is {}x{}, MDP is {}x{}",
            theta.num_states(),
            theta.num_actions(),
            m.num_states(),
            m.num_actions()
        )));
    }
    Ok(())
}

/// Plain policy gradient with a fixed `lambda`: `theta += alpha_n g_n` with
/// horizon and step size indexed by the global episode `n`. No
/// post-processing. Trajectories use seed keys `(master, 0, n, 0)`.
pub fn run_single(
    m: &Mdp,
    theta0: &PolicyParams,
    lambda: f64,
    episodes: u64,
    plan: &PhasePlan,
    master_seed: u64,
) -> Result<RunRecord> {
    plan.validate()?;
    check_shapes(m, theta0)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let gamma = m.gamma();
    let est = &plan.estimator;
    let coefficient = match plan.step_coefficient {
        StepCoefficient::Fixed(c) => c,
        _ => 1.0 / (2.0 * plan.beta(lambda)),
    };
    let mut theta = theta0.clone();
    let mut tracker = BaselineTracker::new(m.num_states());
    let mut steps = Vec::with_capacity(episodes as usize);
    for n in 0..episodes {
        let horizon = horizon_schedule(n, gamma, est.beta)?;
        let alpha = coefficient * step_decay(n);
        let stats = step_stats(m, &theta, lambda, horizon)?;
        let baseline = est.baseline_values(m.num_states(), Some(&tracker));
        let trajs = sample_batch(m, &theta, horizon, 1, SeedSpec::new(master_seed, 0, n, 0))?;
        let grad = minibatch_gradient(&trajs, &theta, lambda, gamma, est.beta, &baseline)?;
        theta.ascend(alpha, &grad);
        if plan.recenter {
            theta = recenter(&theta);
        }
        trajs.iter().for_each(|t| tracker.observe(t, gamma, est.beta));
        steps.push(EpisodeLog {
            n,
            l: 0,
            k: n,
            episodes: 1,
            horizon,
            lambda,
            alpha,
            grad_norm: grad.norm(),
            exact_grad_norm: stats.exact_grad_norm,
            truncated_value: stats.truncated_value,
            value: stats.value,
            min_prob: stats.min_prob,
            updated: true,
        });
    }
    Ok(RunRecord {
        master_seed,
        t0: plan.t0,
        batch: 1,
        gamma,
        total_episodes: episodes,
        initial_theta: theta0.clone(),
        final_theta: theta,
        steps,
    })
}

/// Phased REINFORCE with single-trajectory estimates, stopped after
/// `total_episodes` episodes (possibly mid-phase). Ignores `plan.batch`.
pub fn run_phased(
    m: &Mdp,
    theta0: &PolicyParams,
    plan: &PhasePlan,
    total_episodes: u64,
    master_seed: u64,
) -> Result<RunRecord> {
    run_phased_batched(m, theta0, plan, 1, total_episodes, master_seed)
}

/// Mini-batch phased REINFORCE: each step averages `plan.batch` estimates.
/// `total_episodes` counts trajectories, so `floor(N / M)` updates are made;
/// a remainder is played as a trailing partial step without an update.
pub fn run_minibatch(
    m: &Mdp,
    theta0: &PolicyParams,
    plan: &PhasePlan,
    total_episodes: u64,
    master_seed: u64,
) -> Result<RunRecord> {
    run_phased_batched(m, theta0, plan, plan.batch, total_episodes, master_seed)
}

fn run_phased_batched(
    m: &Mdp,
    theta0: &PolicyParams,
    plan: &PhasePlan,
    batch: usize,
    total_episodes: u64,
    master_seed: u64,
) -> Result<RunRecord> {
    plan.validate()?;
    check_shapes(m, theta0)?;
    if plan.gamma != m.gamma() || plan.num_states != m.num_states() || plan.num_actions != m.num_actions() {
        return Err(Error::InvalidParameter("plan does not match the MDP".into()));
    }
    let gamma = m.gamma();
    let est = &plan.estimator;
    let pp = plan.post_process_config()?;
    let batch_u = batch as u64;
    let full_steps = total_episodes / batch_u;
    let remainder = (total_episodes % batch_u) as usize;
    let total_steps = full_steps + u64::from(remainder > 0);

    let mut theta = post_process(theta0, &pp);
    let mut tracker = BaselineTracker::new(m.num_states());
    let mut steps = Vec::with_capacity(total_steps as usize);
    let (mut l, mut k) = (0u32, 0u64);
    for n in 0..total_steps {
        if k == plan.phase_length(l) {
            theta = post_process(&theta, &pp);
            l += 1;
            k = 0;
        }
        let lambda = plan.lambda(l);
        let alpha = plan.step_size(l, k);
        let horizon = horizon_schedule(k, gamma, est.beta)?;
        let stats = step_stats(m, &theta, lambda, horizon)?;
        let baseline = est.baseline_values(m.num_states(), Some(&tracker));
        let episodes = if n < full_steps { batch } else { remainder };
        let seed = SeedSpec::new(master_seed, u64::from(l), k, 0);
        let trajs = sample_batch(m, &theta, horizon, episodes, seed)?;
        let grad = minibatch_gradient(&trajs, &theta, lambda, gamma, est.beta, &baseline)?;
        let updated = episodes == batch;
        if updated {
            theta.ascend(alpha, &grad);
            if plan.recenter {
                theta = recenter(&theta);
            }
        }
        trajs.iter().for_each(|t| tracker.observe(t, gamma, est.beta));
        steps.push(EpisodeLog {
            n,
            l,
            k,
            episodes,
            horizon,
            lambda,
            alpha,
            grad_norm: grad.norm(),
            exact_grad_norm: stats.exact_grad_norm,
            truncated_value: stats.truncated_value,
            value: stats.value,
            min_prob: stats.min_prob,
            updated,
        });
        k += 1;
    }
    Ok(RunRecord {
        master_seed,
        t0: plan.t0,
        batch,
        gamma,
        total_episodes,
        initial_theta: theta0.clone(),
        final_theta: theta,
        steps,
    })
}

/// Uniform initialization, the default `theta0`.
pub fn uniform_theta(m: &Mdp) -> PolicyParams {
    PolicyParams::zeros(m.num_states(), m.num_actions())
}

/// Row `l` of the schedule: `(T_l, eps_l, lambda_l, eps_pp, C window)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub l: u32,
    pub phase_length: u64,
    pub epsilon: f64,
    pub lambda: f64,
    pub epsilon_pp: f64,
    pub step_coefficient_min: f64,
    pub step_coefficient_max: f64,
}

pub fn schedule_table(plan: &PhasePlan, phases: u32) -> Vec<ScheduleRow> {
    (0..phases)
        .map(|l| {
            let (lo, hi) = plan.step_coefficient_window(l);
            ScheduleRow {
                l,
                phase_length: plan.phase_length(l),
                epsilon: plan.epsilon(l),
                lambda: plan.lambda(l),
                epsilon_pp: plan.epsilon_pp(),
                step_coefficient_min: lo,
                step_coefficient_max: hi,
            }
        })
        .collect()
}

/// `theta` after an explicit ascent step, exposed for replay checks.
pub fn ascent_step(theta: &PolicyParams, alpha: f64, grad: &Table) -> PolicyParams {
    let mut out = theta.clone();
    out.ascend(alpha, grad);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(index_to_global(0, 0, 1).unwrap(), 0);
        assert_eq!(index_to_global(2, 2, 1).unwrap(), 5);
        assert_eq!(global_to_index(5, 1).unwrap(), (2, 2));
        assert_eq!(global_to_index(0, 1).unwrap(), (0, 0));
        assert!(index_to_global(1, 2, 1).is_err());
        assert_eq!(index_to_global(1, 5, 3).unwrap(), 8);
        assert_eq!(global_to_index(8, 3).unwrap(), (1, 5));
    }

    #[test]
    fn index_round_trip() {
        for t0 in [1, 2, 5] {
            for n in 0..=10_000u64 {
                let (l, k) = global_to_index(n, t0).unwrap();
                assert_eq!(index_to_global(l, k, t0).unwrap(), n);
                if t0 == 1 {
                    assert!(f64::from(l) <= ((n + 1) as f64).log2());
                }
            }
        }
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness_constant(0.5, 0.0, 1).unwrap(), 64.0);
        assert_eq!(smoothness_constant(0.5, 0.0, 7).unwrap(), 64.0);
        assert!(smoothness_constant(0.5, 0.2, 3).unwrap() < smoothness_constant(0.5, 0.3, 3).unwrap());
        assert!(smoothness_constant(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn step_sizes_decrease_and_square_sum_below_one() {
        let mut prev = f64::INFINITY;
        let mut sum_sq = 0.0;
        for k in 0..=1_000_000u64 {
            let d = step_decay(k);
            assert!(d < prev);
            prev = d;
            sum_sq += d * d;
        }
        assert!(sum_sq <= 1.0, "sum of squares {sum_sq}");
    }

    #[test]
    fn plan_defaults() {
        let plan = PhasePlan::new(0.9, 3, 2);
        assert_eq!(plan.epsilon_pp(), 0.25);
        assert_eq!(plan.lambda(0), (1.0 - 0.9) / 2.0);
        assert!((plan.lambda(6) / plan.lambda(0) - 0.5).abs() < 1e-15);
        for l in 0..20 {
            let (lo, hi) = plan.step_coefficient_window(l);
            let c = plan.step_coefficient(l);
            assert!(lo <= c && c <= hi);
            assert!(plan.lambda(l) <= plan.lambda_bar());
            assert_eq!(plan.phase_length(l + 1), 2 * plan.phase_length(l));
        }
    }

    #[test]
    fn plan_validation() {
        let mut plan = PhasePlan::new(0.9, 3, 2);
        plan.epsilon_pp = Some(0.6);
        assert!(plan.validate().is_err());
        let mut plan = PhasePlan::new(0.9, 3, 2);
        plan.batch = 0;
        assert!(plan.validate().is_err());
        let mut plan = PhasePlan::new(0.9, 3, 2);
        plan.t0 = 0;
        assert!(plan.validate().is_err());
    }
}
