//! Exact regret bookkeeping.
//!
//! The per-step gap is `F* - F_hat`, where `F_hat` is the exact expected
//! return of the iterate truncated at that step's horizon. Because it is a
//! conditional expectation it can be computed in closed form, so the ledger
//! carries no Monte Carlo noise.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{policy_value, truncated_value, Mdp};
use crate::optimizer::{global_to_index, index_to_global, PhasePlan, RunRecord};
use crate::policy::{softmax_policy, PolicyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub n: u64,
    pub l: u32,
    pub k: u64,
    pub horizon: usize,
    pub episodes: usize,
    /// `F* - F_hat`
    pub gap: f64,
    /// `F* - F`, the untruncated counterpart.
    pub value_gap: f64,
}

/// Append-only record of per-step suboptimality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub f_star: f64,
    pub t0: u64,
    pub batch: usize,
    entries: Vec<LedgerEntry>,
}

impl RegretLedger {
    pub fn new(f_star: f64, t0: u64, batch: usize) -> Self {
        Self {
            f_star,
            t0,
            batch,
            entries: Vec::new(),
        }
    }

    pub fn from_record(record: &RunRecord, f_star: f64) -> Self {
        let mut ledger = Self::new(f_star, record.t0, record.batch);
        for s in &record.steps {
            ledger.push(LedgerEntry {
                n: s.n,
                l: s.l,
                k: s.k,
                horizon: s.horizon,
                episodes: s.episodes,
                gap: f_star - s.truncated_value,
                value_gap: f_star - s.value,
            });
        }
        ledger
    }

    pub fn push(&mut self, entry: LedgerEntry) {
        debug_assert_eq!(entry.n, self.entries.len() as u64);
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn covers(&self, n: u64) -> Result<()> {
        if n >= self.entries.len() as u64 {
            return Err(Error::OutOfRange(format!(
                "ledger holds {} entries, episode {n} requested",
                self.entries.len()
            )));
        }
        Ok(())
    }

    /// Sum of gaps over all steps with global index `<= n`.
    pub fn cumulative_regret(&self, n: u64) -> Result<f64> {
        self.covers(n)?;
        Ok(self.entries[..=n as usize].iter().map(|e| e.gap).sum())
    }

    /// Cumulative regret for every prefix.
    pub fn cumulative_series(&self) -> Vec<f64> {
        self.entries
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e.gap;
                Some(*acc)
            })
            .collect()
    }

    /// `sum_{k=0}^{K} gap_{l,k}`
    pub fn phase_regret(&self, l: u32, big_k: u64) -> Result<f64> {
        let start = index_to_global(l, 0, self.t0)?;
        let end = index_to_global(l, big_k, self.t0)?;
        self.covers(end)?;
        Ok(self.entries[start as usize..=end as usize].iter().map(|e| e.gap).sum())
    }

    /// Right-hand side of the phase stitching identity: full phases before
    /// `l_N` plus the partial phase up to `k_N`.
    pub fn stitched_regret(&self, n: u64) -> Result<f64> {
        self.covers(n)?;
        let (ln, kn) = global_to_index(n, self.t0)?;
        let mut total = 0.0;
        for l in 0..ln {
            total += self.phase_regret(l, (1u64 << l) * self.t0 - 1)?;
        }
        Ok(total + self.phase_regret(ln, kn)?)
    }

    /// Mini-batch regret over the first `episodes` episodes: every complete
    /// step is weighted by `M`, the step `floor(episodes/M)` by the
    /// remainder.
    pub fn minibatch_regret_episodes(&self, episodes: u64, batch: usize) -> Result<f64> {
        if batch == 0 || batch != self.batch {
            return Err(Error::InvalidParameter(format!(
                "ledger was recorded with M = {}, got M = {batch}",
                self.batch
            )));
        }
        let m = batch as u64;
        let full = episodes / m;
        let rest = episodes - m * full;
        let mut total = 0.0;
        if full > 0 {
            self.covers(full - 1)?;
            total += m as f64 * self.entries[..full as usize].iter().map(|e| e.gap).sum::<f64>();
        }
        if rest > 0 {
            self.covers(full)?;
            total += rest as f64 * self.entries[full as usize].gap;
        }
        Ok(total)
    }

    /// Mini-batch regret through episode index `n` (so `n + 1` episodes),
    /// matching the indexing of [`cumulative_regret`](Self::cumulative_regret).
    pub fn minibatch_regret(&self, n: u64, batch: usize) -> Result<f64> {
        self.minibatch_regret_episodes(n + 1, batch)
    }

    /// Least-squares slope of `log regret(N)` against `log(N + 1)`.
    pub fn average_regret_slope(&self, checkpoints: &[u64]) -> Result<f64> {
        let points = checkpoints
            .iter()
            .map(|&n| Ok(((n + 1) as f64, self.cumulative_regret(n)?)))
            .collect::<Result<Vec<_>>>()?;
        log_log_slope(&points)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let batched = self.batch > 1;
        write!(out, "n,l,k,H,gap,cumulative_regret,average_regret")?;
        if batched {
            write!(out, ",episodes,total_episodes,minibatch_regret")?;
        }
        writeln!(out)?;
        let mut cumulative = 0.0;
        let mut weighted = 0.0;
        let mut total_episodes = 0u64;
        for e in &self.entries {
            cumulative += e.gap;
            write!(
                out,
                "{},{},{},{},{},{},{}",
                e.n,
                e.l,
                e.k,
                e.horizon,
                e.gap,
                cumulative,
                cumulative / (e.n + 1) as f64
            )?;
            if batched {
                total_episodes += e.episodes as u64;
                weighted += e.episodes as f64 * e.gap;
                write!(out, ",{},{},{}", e.episodes, total_episodes, weighted)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Least-squares slope through `(log x, log y)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("need at least two checkpoints".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::InvalidParameter("checkpoints need positive N and regret".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("checkpoints must be distinct".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Exact gap `F* - F_hat(pi_theta, H)`.
pub fn episode_gap(m: &Mdp, theta: &PolicyParams, horizon: usize, f_star: f64) -> Result<f64> {
    Ok(f_star - truncated_value(m, &softmax_policy(theta), horizon)?)
}

/// Per-phase constants of the single-phase regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseConstants {
    pub l: u32,
    pub beta_lambda: f64,
    pub step_coefficient: f64,
    pub e: f64,
    pub c: f64,
    pub d: f64,
}

/// `E_l`, `C_l`, `D_l` for phase `l`, given the phase's initial objective
/// gap `F* - L_{lambda_l}(theta_{l,0})`.
pub fn phase_constants(
    plan: &PhasePlan,
    consts: &crate::estimator::BoundConstants,
    l: u32,
    initial_objective_gap: f64,
) -> PhaseConstants {
    let g = plan.gamma;
    let (s, a) = (plan.num_states as f64, plan.num_actions as f64);
    let lambda = plan.lambda(l);
    let beta_lambda = 8.0 / (1.0 - g).powi(3) + 2.0 * lambda / s;
    let ca = plan.step_coefficient(l);
    let inv2 = 1.0 / (1.0 - g).powi(2);
    PhaseConstants {
        l,
        beta_lambda,
        step_coefficient: ca,
        e: ca * (1.0 - g).powi(2) / (16.0 * s * s * a * a),
        c: 32.0 * consts.c1.powi(2) * ca.powi(2) * (inv2 + lambda).powi(2)
            + beta_lambda.powi(2) * consts.c1.powi(4) * ca.powi(4) / 2.0,
        d: consts.c * ca.powi(2) + beta_lambda * consts.m1 * ca.powi(2) + initial_objective_gap,
    }
}

/// Problem-level constants of the REINFORCE regret bound with the
/// smallest admissible step coefficient `1/(2 beta_{lambda_bar})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReinforceBoundConstants {
    pub gamma: f64,
    pub e_lower: f64,
    pub d_tilde: f64,
    pub c_tilde: f64,
}

pub fn reinforce_bound_constants(
    gamma: f64,
    num_states: usize,
    num_actions: usize,
    baseline_bound: f64,
    vbar: f64,
) -> ReinforceBoundConstants {
    let w = 1.0 - gamma;
    let (s, a) = (num_states as f64, num_actions as f64);
    let lambda_bar = w / 2.0;
    let beta_bar = 8.0 / w.powi(3) + 2.0 * lambda_bar / s;
    let c_alpha = 1.0 / (2.0 * beta_bar);
    let scaled = (1.0 + baseline_bound * w) / (w * w) + lambda_bar;
    ReinforceBoundConstants {
        gamma,
        e_lower: c_alpha * w * w / (16.0 * s * s * a * a),
        d_tilde: w.powi(6) * (1.0 / (w * w) + lambda_bar).powi(2)
            + w.powi(6) * beta_bar * (32.0 / w.powi(4) + vbar) / 256.0
            + 1.0 / w
            + (2.0 * a).ln(),
        c_tilde: beta_bar.powi(2) * w.powi(12) * scaled.powi(4) / 8192.0 + 0.5 * w.powi(6) * scaled.powi(4),
    }
}

impl ReinforceBoundConstants {
    /// High-probability regret bound `R1(N) + R2(N)` at confidence `1 - delta`.
    pub fn regret_bound(&self, n: u64, delta: f64, mismatch: f64) -> f64 {
        let g = self.gamma;
        let nf = n as f64;
        let log_term = ((nf + 1.0).log2() + 2.0) * 2f64.ln() + (1.0 / delta).ln();
        let lead = 4.0 * (self.d_tilde + (2.0 * self.c_tilde * log_term).sqrt()) / ((1.0 - g) * self.e_lower);
        let r1 = (lead + mismatch) * (nf + 1.0).powf(5.0 / 6.0) * (2.0 * nf + 3.0).log2().powi(2);
        let r2 = g * ((nf + 1.0).log2() + 1.0).powi(2) / (1.0 - g);
        r1 + r2
    }
}

/// Exact `F*` minus the regularized objective at `theta`.
pub fn objective_gap(m: &Mdp, theta: &PolicyParams, lambda: f64, f_star: f64) -> Result<f64> {
    let value = policy_value(m, &softmax_policy(theta))?.value;
    Ok(f_star - value - lambda * crate::policy::regularizer(theta))
}
