//! REINFORCE gradient estimates of the log-barrier regularized objective.
//!
//! For a trajectory of horizon `H` the single-sample estimate is
//!
//! ```text
//! g = sum_{t=0}^{floor(beta H)} gamma^t (Qhat_t - b(s_t)) grad log pi(a_t|s_t)
//!     + (lambda / SA) sum_{s,a} grad log pi(a|s)
//! ```
//!
//! with `Qhat_t` the discounted reward-to-go up to `H`. The outer sum stops
//! at `floor(beta H)` so that every `Qhat_t` still sees a long enough tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::StatePolicy;
use crate::policy::{accumulate_log_grad, regularizer_gradient_from_policy, softmax_policy, PolicyParams};
use crate::rollout::Trajectory;
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Zero,
    Constant {
        value: f64,
    },
    PerState {
        values: Vec<f64>,
    },
    /// Running mean of observed reward-to-go per state over earlier
    /// episodes, clipped to `[-B, B]`.
    ReinforcementAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub beta: f64,
    pub baseline: Baseline,
    /// `B` with `|b(s)| <= B`.
    pub baseline_bound: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            baseline: Baseline::Zero,
            baseline_bound: 0.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self, num_states: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be in (0,1), got {}",
                self.beta
            )));
        }
        let bound = self.baseline_bound;
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "baseline bound must be >= 0, got {bound}"
            )));
        }
        let check = |v: f64| {
            if v.abs() > bound || !v.is_finite() {
                Err(Error::InvalidParameter(format!(
                    "baseline value {v} exceeds bound {bound}"
                )))
            } else {
                Ok(())
            }
        };
        match &self.baseline {
            Baseline::Zero | Baseline::ReinforcementAverage => Ok(()),
            Baseline::Constant { value } => check(*value),
            Baseline::PerState { values } => {
                if values.len() != num_states {
                    return Err(Error::InvalidParameter(format!(
                        "per-state baseline has {} entries, expected {num_states}",
                        values.len()
                    )));
                }
                values.iter().try_for_each(|&v| check(v))
            }
        }
    }

    /// Baseline value per state for the next episode. `tracker` is only read
    /// for the reinforcement-average variant.
    pub fn baseline_values(&self, num_states: usize, tracker: Option<&BaselineTracker>) -> Vec<f64> {
        match &self.baseline {
            Baseline::Zero => vec![0.0; num_states],
            Baseline::Constant { value } => vec![*value; num_states],
            Baseline::PerState { values } => values.clone(),
            Baseline::ReinforcementAverage => match tracker {
                Some(t) => t.values(self.baseline_bound),
                None => vec![0.0; num_states],
            },
        }
    }
}

/// Per-state running mean of reward-to-go, fed only with finished episodes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineTracker {
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl BaselineTracker {
    pub fn new(num_states: usize) -> Self {
        Self {
            sums: vec![0.0; num_states],
            counts: vec![0; num_states],
        }
    }

    /// Records the reward-to-go at every step the estimator uses.
    pub fn observe(&mut self, traj: &Trajectory, gamma: f64, beta: f64) {
        let q = reward_to_go_all(traj, gamma);
        let steps = outer_cutoff(traj.horizon(), beta) + 1;
        for (&s, &qt) in traj.states.iter().zip(&q).take(steps) {
            self.sums[s] += qt;
            self.counts[s] += 1;
        }
    }

    pub fn values(&self, bound: f64) -> Vec<f64> {
        self.sums
            .iter()
            .zip(&self.counts)
            .map(|(&sum, &n)| {
                if n == 0 {
                    0.0
                } else {
                    (sum / n as f64).clamp(-bound, bound)
                }
            })
            .collect()
    }
}

/// `floor(beta H)`, capped at `H`.
pub fn outer_cutoff(horizon: usize, beta: f64) -> usize {
    ((beta * horizon as f64).floor() as usize).min(horizon)
}

/// Discounted reward-to-go for every step, by one reverse pass.
pub fn reward_to_go_all(traj: &Trajectory, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; traj.rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(&traj.rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

pub fn reward_to_go(traj: &Trajectory, t: usize, gamma: f64) -> Result<f64> {
    if t > traj.horizon() {
        return Err(Error::OutOfRange(format!("step {t} beyond horizon {}", traj.horizon())));
    }
    Ok(traj.rewards[t..].iter().rev().fold(0.0, |acc, r| r + gamma * acc))
}

/// Single-trajectory REINFORCE estimate given the policy `pi = softmax(theta)`.
pub fn reinforce_gradient_with_policy(
    traj: &Trajectory,
    pi: &StatePolicy,
    lambda: f64,
    gamma: f64,
    beta: f64,
    baseline: &[f64],
) -> Table {
    let q = reward_to_go_all(traj, gamma);
    let mut grad = regularizer_gradient_from_policy(pi);
    grad.scale(lambda);
    let mut discount = 1.0;
    let steps = outer_cutoff(traj.horizon(), beta) + 1;
    for ((&s, &a), &qt) in traj.states.iter().zip(&traj.actions).zip(&q).take(steps) {
        accumulate_log_grad(&mut grad, pi, s, a, discount * (qt - baseline[s]));
        discount *= gamma;
    }
    grad
}

pub fn reinforce_gradient(
    traj: &Trajectory,
    theta: &PolicyParams,
    lambda: f64,
    gamma: f64,
    beta: f64,
    baseline: &[f64],
) -> Result<Table> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if baseline.len() != theta.num_states() {
        return Err(Error::InvalidParameter("baseline length must equal S".into()));
    }
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    Ok(reinforce_gradient_with_policy(
        traj,
        &softmax_policy(theta),
        lambda,
        gamma,
        beta,
        baseline,
    ))
}

/// Arithmetic mean of per-trajectory estimates.
pub fn minibatch_gradient(
    trajs: &[Trajectory],
    theta: &PolicyParams,
    lambda: f64,
    gamma: f64,
    beta: f64,
    baseline: &[f64],
) -> Result<Table> {
    if trajs.is_empty() {
        return Err(Error::InvalidParameter(
            "mini-batch needs at least one trajectory".into(),
        ));
    }
    let mut total = Table::zeros(theta.num_states(), theta.num_actions());
    for traj in trajs {
        total.add_scaled(1.0, &reinforce_gradient(traj, theta, lambda, gamma, beta, baseline)?);
    }
    total.scale(1.0 / trajs.len() as f64);
    Ok(total)
}

/// Constants certifying boundedness, near-unbiasedness and second-moment
/// growth of the estimator for `lambda <= lambda_bar` and `|b| <= B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub gamma: f64,
    pub lambda_bar: f64,
    pub baseline_bound: f64,
    pub batch: usize,
    /// Bound on `sum_k delta_k^2`.
    pub c: f64,
    /// Almost-sure norm bound.
    pub c1: f64,
    pub c2: f64,
    pub m1: f64,
    pub m2: f64,
    /// Upper end of the admissible range for the variance bound `V_b`.
    pub vbar_upper: f64,
}

impl BoundConstants {
    /// `delta_k = (2/(1-g)^2 + 2 lambda_bar) (k+1)^{-2/3}`
    pub fn delta(&self, k: u64) -> f64 {
        let g = self.gamma;
        (2.0 / (1.0 - g).powi(2) + 2.0 * self.lambda_bar) * (k as f64 + 1.0).powf(-2.0 / 3.0)
    }

    /// Smoothness constant of `L_{lambda_bar}` for `S` states.
    pub fn beta_lambda(&self, num_states: usize) -> f64 {
        8.0 / (1.0 - self.gamma).powi(3) + 2.0 * self.lambda_bar / num_states as f64
    }

    /// Bias bound `4 gamma^{min(beta,1-beta) H} / (1-gamma)^2`.
    pub fn bias_bound(&self, beta: f64, horizon: usize) -> f64 {
        let g = self.gamma;
        4.0 * g.powf(beta.min(1.0 - beta) * horizon as f64) / (1.0 - g).powi(2)
    }

    /// `M1 + M2 ||grad L||^2`
    pub fn second_moment_bound(&self, grad_norm_sq: f64) -> f64 {
        self.m1 + self.m2 * grad_norm_sq
    }
}

pub fn lemma_constants(gamma: f64, lambda_bar: f64, baseline_bound: f64, batch: usize) -> Result<BoundConstants> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must be in (0,1), got {gamma}")));
    }
    if !(lambda_bar >= 0.0) || !(baseline_bound >= 0.0) {
        return Err(Error::InvalidParameter("lambda_bar and B must be >= 0".into()));
    }
    if batch == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let w = 1.0 - gamma;
    let inv2 = 1.0 / (w * w);
    let scaled_b = (1.0 + baseline_bound * w) * inv2;
    let vbar_upper = 4.0 * (scaled_b + lambda_bar).powi(2);
    Ok(BoundConstants {
        gamma,
        lambda_bar,
        baseline_bound,
        batch,
        c: 16.0 * (inv2 + lambda_bar).powi(2),
        c1: 2.0 * scaled_b + 2.0 * lambda_bar,
        c2: 1.0,
        m1: 32.0 * inv2 * inv2 + vbar_upper / batch as f64,
        m2: 2.0,
        vbar_upper,
    })
}
