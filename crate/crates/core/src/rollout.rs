//! Seeded trajectory sampling.
//!
//! Every trajectory gets its own ChaCha8 stream keyed on
//! `(master_seed, phase, episode, batch_index)`, so a batch can be sampled
//! in any order or in parallel and still be bitwise identical.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Mdp, StatePolicy};
use crate::policy::{softmax_policy, PolicyParams};

/// One sampled episode `(s_t, a_t, r_t)` for `t = 0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    /// Index of the last step; the trajectory has `horizon + 1` steps.
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Key of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub phase: u64,
    pub episode: u64,
    pub index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, phase: u64, episode: u64, index: u64) -> Self {
        Self {
            master_seed,
            phase,
            episode,
            index,
        }
    }

    pub fn with_index(self, index: u64) -> Self {
        Self { index, ..self }
    }

    /// The full 256-bit ChaCha key is the concatenation of the four words,
    /// so distinct specs never share a stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (chunk, word) in key
            .chunks_exact_mut(8)
            .zip([self.master_seed, self.phase, self.episode, self.index])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Horizon meeting the truncation requirement of the REINFORCE bias bound:
/// `H >= 2 log_{1/g}(8(k+1)/(1-g)^3) / (3 min(beta, 1-beta))`, rounded up.
pub fn horizon_schedule(k: u64, gamma: f64, beta: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must be in (0,1), got {gamma}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta must be in (0,1), got {beta}")));
    }
    let log_base = (1.0 / gamma).ln();
    let k1 = k as f64 + 1.0;
    let arg = 8.0 * k1 / (1.0 - gamma).powi(3);
    let bound = 2.0 * arg.ln() / log_base / (3.0 * beta.min(1.0 - beta));
    let floor = k1.ln() / log_base;
    Ok(bound.max(floor).ceil().max(1.0) as usize)
}

/// Inverse-CDF draw scanning `weights` in index order.
fn categorical(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            cum += w;
            last_positive = i;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

/// Samples `horizon + 1` steps under a precomputed policy.
pub fn sample_with_policy(m: &Mdp, pi: &StatePolicy, horizon: usize, seed: SeedSpec) -> Trajectory {
    let mut rng = seed.rng();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon + 1);
    let mut rewards = Vec::with_capacity(horizon + 1);
    let mut s = categorical(m.rho(), &mut rng);
    for t in 0..=horizon {
        let a = categorical(pi.row(s), &mut rng);
        states.push(s);
        actions.push(a);
        rewards.push(m.reward(s, a));
        if t < horizon {
            s = categorical(m.next_state_dist(s, a), &mut rng);
        }
    }
    Trajectory {
        states,
        actions,
        rewards,
    }
}

pub fn sample_trajectory(m: &Mdp, theta: &PolicyParams, horizon: usize, seed: SeedSpec) -> Trajectory {
    sample_with_policy(m, &softmax_policy(theta), horizon, seed)
}

/// `batch` independent trajectories on streams `index = 0..batch`, sampled
/// in parallel.
pub fn sample_batch(
    m: &Mdp,
    theta: &PolicyParams,
    horizon: usize,
    batch: usize,
    seed: SeedSpec,
) -> Result<Vec<Trajectory>> {
    if batch == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let pi = softmax_policy(theta);
    Ok((0..batch as u64)
        .into_par_iter()
        .map(|i| sample_with_policy(m, &pi, horizon, seed.with_index(i)))
        .collect())
}

/// One line of the optional trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub l: u64,
    pub k: u64,
    pub i: u64,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn new(seed: SeedSpec, traj: &Trajectory) -> Self {
        Self {
            seed: seed.master_seed,
            l: seed.phase,
            k: seed.episode,
            i: seed.index,
            states: traj.states.clone(),
            actions: traj.actions.clone(),
            rewards: traj.rewards.clone(),
        }
    }
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[TrajectoryRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
