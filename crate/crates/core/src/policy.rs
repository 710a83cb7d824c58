//! Soft-max policy parametrization and the log-barrier regularizer.
//!
//! `pi(a|s) = exp(theta[s][a]) / sum_a' exp(theta[s][a'])` and
//! `R(theta) = (1/SA) sum_{s,a} log pi(a|s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::StatePolicy;
use crate::table::Table;

/// Unconstrained soft-max parameters, one logit per state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyParams {
    theta: Table,
}

impl PolicyParams {
    pub fn new(theta: Table) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter("theta has non-finite entries".into()));
        }
        if theta.rows() == 0 || theta.cols() == 0 {
            return Err(Error::InvalidParameter("theta must be non-empty".into()));
        }
        Ok(Self { theta })
    }

    /// All-zero parameters, i.e. the uniform policy.
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            theta: Table::zeros(num_states, num_actions),
        }
    }

    pub fn num_states(&self) -> usize {
        self.theta.rows()
    }

    pub fn num_actions(&self) -> usize {
        self.theta.cols()
    }

    pub fn table(&self) -> &Table {
        &self.theta
    }

    pub fn into_table(self) -> Table {
        self.theta
    }

    /// Gradient-ascent step `theta += step * direction`, with no projection.
    pub fn ascend(&mut self, step: f64, direction: &Table) {
        self.theta.add_scaled(step, direction);
    }

    pub fn softmax(&self) -> StatePolicy {
        softmax_policy(self)
    }
}

/// Lower bound enforced on every action probability by [`post_process`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostProcessConfig {
    epsilon_pp: f64,
}

impl PostProcessConfig {
    pub fn new(epsilon_pp: f64, num_actions: usize) -> Result<Self> {
        let cap = 1.0 / num_actions as f64;
        if !(epsilon_pp > 0.0 && epsilon_pp <= cap) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_pp must lie in (0, 1/A] = (0, {cap}], got {epsilon_pp}"
            )));
        }
        Ok(Self { epsilon_pp })
    }

    pub fn epsilon_pp(&self) -> f64 {
        self.epsilon_pp
    }
}

fn softmax_row(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(logits) {
        *o = (x - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

pub fn softmax_policy(theta: &PolicyParams) -> StatePolicy {
    let t = theta.table();
    let mut probs = Table::zeros(t.rows(), t.cols());
    for s in 0..t.rows() {
        softmax_row(t.row(s), probs.row_mut(s));
    }
    StatePolicy::from_table_unchecked(probs)
}

/// Log-probabilities computed as `theta - logsumexp(row)`.
pub fn log_softmax(theta: &PolicyParams) -> Table {
    let t = theta.table();
    let mut out = t.clone();
    for s in 0..t.rows() {
        let row = t.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        out.row_mut(s).iter_mut().for_each(|x| *x -= lse);
    }
    out
}

/// `grad_theta log pi(a|s)`: zero outside row `s`; row `s` is `e_a - pi(.|s)`.
pub fn log_policy_gradient(theta: &PolicyParams, s: usize, a: usize) -> Result<Table> {
    let (ns, na) = (theta.num_states(), theta.num_actions());
    if s >= ns || a >= na {
        return Err(Error::OutOfRange(format!("(s, a) = ({s}, {a}) outside {ns}x{na}")));
    }
    let mut out = Table::zeros(ns, na);
    softmax_row(theta.table().row(s), out.row_mut(s));
    let row = out.row_mut(s);
    row.iter_mut().for_each(|x| *x = -*x);
    row[a] += 1.0;
    Ok(out)
}

/// Adds `scale * grad log pi(a|s)` into `acc` using a precomputed policy.
pub(crate) fn accumulate_log_grad(acc: &mut Table, pi: &StatePolicy, s: usize, a: usize, scale: f64) {
    let probs = pi.row(s);
    let row = acc.row_mut(s);
    for (g, p) in row.iter_mut().zip(probs) {
        *g -= scale * p;
    }
    row[a] += scale;
}

pub fn regularizer(theta: &PolicyParams) -> f64 {
    let logp = log_softmax(theta);
    let n = logp.as_slice().len() as f64;
    logp.as_slice().iter().sum::<f64>() / n
}

/// Closed form `dR/dtheta[s][a] = (1/SA)(1 - A pi(a|s))`.
pub fn regularizer_gradient(theta: &PolicyParams) -> Table {
    regularizer_gradient_from_policy(&softmax_policy(theta))
}

pub(crate) fn regularizer_gradient_from_policy(pi: &StatePolicy) -> Table {
    let (ns, na) = (pi.num_states(), pi.num_actions());
    let sa = (ns * na) as f64;
    let mut out = Table::zeros(ns, na);
    for s in 0..ns {
        for a in 0..na {
            out[(s, a)] = (1.0 - na as f64 * pi.prob(s, a)) / sa;
        }
    }
    out
}

/// Mixes the policy toward uniform, `pi_hat = eps + (1 - A eps) pi`, and
/// returns `theta' = log pi_hat` (row offsets fixed to zero).
pub fn post_process(theta: &PolicyParams, cfg: &PostProcessConfig) -> PolicyParams {
    let pi = softmax_policy(theta);
    let na = theta.num_actions() as f64;
    let eps = cfg.epsilon_pp();
    let mut out = pi.table().clone();
    out.as_mut_slice()
        .iter_mut()
        .for_each(|p| *p = (eps + (1.0 - na * eps) * *p).ln());
    PolicyParams { theta: out }
}

/// Subtracts each row's mean; the induced policy is unchanged.
pub fn recenter(theta: &PolicyParams) -> PolicyParams {
    let mut out = theta.theta.clone();
    for s in 0..out.rows() {
        let row = out.row_mut(s);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        row.iter_mut().for_each(|x| *x -= mean);
    }
    PolicyParams { theta: out }
}
