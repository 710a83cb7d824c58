//! Finite discounted MDPs and exact solvers.
//!
//! Everything here is exact up to floating point: policy evaluation and the
//! discounted visitation distribution come from direct LU solves with
//! partial pivoting, optimal control from policy iteration.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{regularizer, regularizer_gradient_from_policy, softmax_policy, PolicyParams};
use crate::table::Table;

const SIMPLEX_TOL: f64 = 1e-12;

/// A finite MDP `(S, A, p, r, gamma, rho)` with deterministic rewards in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpFile", into = "MdpFile")]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    /// Flat `[s][a][s']`.
    transitions: Vec<f64>,
    rewards: Table,
    gamma: f64,
    rho: Vec<f64>,
}

/// On-disk JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub rho: Vec<f64>,
    pub rewards: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MdpFile> for Mdp {
    type Error = Error;

    fn try_from(f: MdpFile) -> Result<Self> {
        let (ns, na) = (f.num_states, f.num_actions);
        if f.rewards.len() != ns || f.rewards.iter().any(|r| r.len() != na) {
            return Err(Error::InvalidMdp(format!("rewards must be {ns}x{na}")));
        }
        if f.transitions.len() != ns
            || f.transitions
                .iter()
                .any(|r| r.len() != na || r.iter().any(|row| row.len() != ns))
        {
            return Err(Error::InvalidMdp(format!("transitions must be {ns}x{na}x{ns}")));
        }
        let transitions = f.transitions.into_iter().flatten().flatten().collect();
        let rewards = Table::from_rows(&f.rewards)?;
        Mdp::new(ns, na, transitions, rewards, f.gamma, f.rho)
    }
}

impl From<Mdp> for MdpFile {
    fn from(m: Mdp) -> Self {
        let (ns, na) = (m.num_states, m.num_actions);
        let transitions = (0..ns)
            .map(|s| (0..na).map(|a| m.next_state_dist(s, a).to_vec()).collect())
            .collect();
        MdpFile {
            num_states: ns,
            num_actions: na,
            gamma: m.gamma,
            rho: m.rho,
            rewards: m.rewards.to_rows(),
            transitions,
        }
    }
}

impl Mdp {
    /// Builds and validates an MDP. `transitions` is flat `[s][a][s']`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<f64>,
        rewards: Table,
        gamma: f64,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            num_states,
            num_actions,
            transitions,
            rewards,
            gamma,
            rho,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks every standing assumption, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let (ns, na) = (self.num_states, self.num_actions);
        if ns == 0 || na == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        if self.transitions.len() != ns * na * ns {
            return Err(Error::InvalidMdp(format!(
                "transition tensor has {} entries, expected {}",
                self.transitions.len(),
                ns * na * ns
            )));
        }
        if self.rewards.rows() != ns || self.rewards.cols() != na {
            return Err(Error::InvalidMdp(format!("rewards must be {ns}x{na}")));
        }
        if self.rho.len() != ns {
            return Err(Error::InvalidMdp(format!("rho must have {ns} entries")));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidMdp(format!(
                "discount must lie strictly inside (0, 1), got {}",
                self.gamma
            )));
        }
        for s in 0..ns {
            for a in 0..na {
                let row = self.next_state_dist(s, a);
                if let Some((s2, p)) = row.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
                    return Err(Error::InvalidMdp(format!(
                        "transition p({s2}|{s},{a}) = {p} is negative"
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::InvalidMdp(format!(
                        "transition row ({s},{a}) sums to {total}, off by {:e}",
                        total - 1.0
                    )));
                }
                let r = self.rewards[(s, a)];
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::InvalidMdp(format!("reward out of [0,1]: r({s},{a}) = {r}")));
                }
            }
        }
        if let Some((s, p)) = self.rho.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::InvalidMdp(format!(
                "initial distribution not strictly positive: rho({s}) = {p}"
            )));
        }
        let total: f64 = self.rho.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidMdp(format!(
                "initial distribution sums to {total}, off by {:e}",
                total - 1.0
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn rewards(&self) -> &Table {
        &self.rewards
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[(s, a)]
    }

    /// `p(. | s, a)`
    pub fn next_state_dist(&self, s: usize, a: usize) -> &[f64] {
        let ns = self.num_states;
        let start = (s * self.num_actions + a) * ns;
        &self.transitions[start..start + ns]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    fn check_policy(&self, pi: &StatePolicy) -> Result<()> {
        if pi.num_states() != self.num_states || pi.num_actions() != self.num_actions {
            return Err(Error::InvalidPolicy(format!(
                "policy shape {}x{} does not match MDP {}x{}",
                pi.num_states(),
                pi.num_actions(),
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }

    /// State-to-state kernel and expected reward under `pi`.
    fn induced_chain(&self, pi: &StatePolicy) -> (DMatrix<f64>, DVector<f64>) {
        let ns = self.num_states;
        let mut p = DMatrix::zeros(ns, ns);
        let mut r = DVector::zeros(ns);
        for s in 0..ns {
            for a in 0..self.num_actions {
                let w = pi.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                r[s] += w * self.reward(s, a);
                for (s2, q) in self.next_state_dist(s, a).iter().enumerate() {
                    p[(s, s2)] += w * q;
                }
            }
        }
        (p, r)
    }

    fn q_from_v(&self, v: &DVector<f64>) -> Table {
        let mut q = Table::zeros(self.num_states, self.num_actions);
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let next: f64 = self
                    .next_state_dist(s, a)
                    .iter()
                    .zip(v.iter())
                    .map(|(p, v)| p * v)
                    .sum();
                q[(s, a)] = self.reward(s, a) + self.gamma * next;
            }
        }
        q
    }
}

fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.lu().solve(&b).ok_or(Error::Singular)
}

/// A stochastic policy as an `S x A` table of probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatePolicy {
    probs: Table,
}

impl StatePolicy {
    pub fn new(probs: Table) -> Result<Self> {
        for s in 0..probs.rows() {
            let row = probs.row(s);
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::InvalidPolicy(format!("row {s} has a negative entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidPolicy(format!("row {s} sums to {total}")));
            }
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_table_unchecked(probs: Table) -> Self {
        Self { probs }
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            probs: Table::filled(num_states, num_actions, 1.0 / num_actions as f64),
        }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = Table::zeros(actions.len(), num_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::OutOfRange(format!("action {a} in state {s}")));
            }
            probs[(s, a)] = 1.0;
        }
        Ok(Self { probs })
    }

    pub fn num_states(&self) -> usize {
        self.probs.rows()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.cols()
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        self.probs.row(s)
    }

    pub fn table(&self) -> &Table {
        &self.probs
    }

    /// Greedy action per state when the policy is deterministic.
    pub fn argmax_actions(&self) -> Vec<usize> {
        (0..self.num_states())
            .map(|s| {
                let row = self.row(s);
                (0..row.len()).fold(0, |best, a| if row[a] > row[best] { a } else { best })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    /// `F(pi) = rho . V^pi`
    pub value: f64,
    pub state_values: Vec<f64>,
    pub q_values: Table,
    /// Discounted state visitation `d_rho^pi`.
    pub visitation: Vec<f64>,
}

pub fn validate_mdp(m: &Mdp) -> Result<()> {
    m.validate()
}

/// Exact evaluation of `pi`: `V`, `Q`, `F` and `d_rho^pi`.
pub fn policy_value(m: &Mdp, pi: &StatePolicy) -> Result<ValueReport> {
    m.check_policy(pi)?;
    let ns = m.num_states;
    let g = m.gamma;
    let (p, r) = m.induced_chain(pi);
    let eye = DMatrix::<f64>::identity(ns, ns);

    let v = solve(&eye - &p * g, r)?;
    let q_values = m.q_from_v(&v);
    let value = m.rho.iter().zip(v.iter()).map(|(a, b)| a * b).sum();

    let rho = DVector::from_column_slice(&m.rho);
    let x = solve(&eye - p.transpose() * g, rho)?;
    let visitation = x.iter().map(|x| (1.0 - g) * x).collect();

    Ok(ValueReport {
        value,
        state_values: v.iter().copied().collect(),
        q_values,
        visitation,
    })
}

/// Expected discounted return truncated after step `horizon` (inclusive).
pub fn truncated_value(m: &Mdp, pi: &StatePolicy, horizon: usize) -> Result<f64> {
    m.check_policy(pi)?;
    let (p, r) = m.induced_chain(pi);
    let mut mu = DVector::from_column_slice(&m.rho);
    let mut discount = 1.0;
    let mut total = 0.0;
    for t in 0..=horizon {
        total += discount * mu.dot(&r);
        if t < horizon {
            mu = p.tr_mul(&mu);
            discount *= m.gamma;
        }
    }
    Ok(total)
}

/// Deterministic optimal policy and `F*` by policy iteration.
///
/// Greedy improvement breaks ties toward the lowest action index; values
/// within a relative `1e-12` of the row maximum count as ties.
pub fn solve_optimal(m: &Mdp) -> Result<(StatePolicy, f64)> {
    let na = m.num_actions;
    let mut actions = vec![0usize; m.num_states];
    // Policy iteration terminates in at most A^S steps; the cap only guards
    // against round-off cycling between tied actions.
    for _ in 0..10_000 {
        let pi = StatePolicy::deterministic(&actions, na)?;
        let report = policy_value(m, &pi)?;
        let q = &report.q_values;
        let greedy: Vec<usize> = (0..m.num_states)
            .map(|s| {
                let row = q.row(s);
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * best.abs().max(1.0);
                row.iter().position(|&x| best - x <= tol).unwrap_or(0)
            })
            .collect();
        if greedy == actions {
            return Ok((pi, report.value));
        }
        actions = greedy;
    }
    Err(Error::InvalidMdp("policy iteration failed to terminate".into()))
}

/// `max_s d_rho^{pi*}(s) / rho(s)`.
pub fn mismatch_coefficient(m: &Mdp) -> Result<f64> {
    let (pi_star, _) = solve_optimal(m)?;
    let report = policy_value(m, &pi_star)?;
    Ok(report
        .visitation
        .iter()
        .zip(&m.rho)
        .map(|(d, r)| d / r)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `L_lambda(theta) = F(pi_theta) + lambda R(theta)`.
pub fn regularized_objective(m: &Mdp, theta: &PolicyParams, lambda: f64) -> Result<f64> {
    let report = policy_value(m, &softmax_policy(theta))?;
    Ok(report.value + lambda * regularizer(theta))
}

/// Exact `grad L_lambda` via the policy gradient theorem:
/// `dF/dtheta[s][a] = d(s) pi(a|s) (Q(s,a) - V(s)) / (1 - gamma)`.
pub fn exact_regularized_gradient(m: &Mdp, theta: &PolicyParams, lambda: f64) -> Result<Table> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let pi = softmax_policy(theta);
    let report = policy_value(m, &pi)?;
    let mut grad = regularizer_gradient_from_policy(&pi);
    grad.scale(lambda);
    let weight = 1.0 / (1.0 - m.gamma);
    for s in 0..m.num_states {
        let ds = report.visitation[s] * weight;
        let v = report.state_values[s];
        for a in 0..m.num_actions {
            grad[(s, a)] += ds * pi.prob(s, a) * (report.q_values[(s, a)] - v);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(rewards: Vec<f64>, gamma: f64) -> Mdp {
        let na = rewards.len();
        Mdp::new(
            1,
            na,
            vec![1.0; na],
            Table::from_vec(1, na, rewards).unwrap(),
            gamma,
            vec![1.0],
        )
        .unwrap()
    }

    /// state 0: reward 0, moves to 1; state 1: absorbing, reward 1.
    fn two_state_chain(rho: Vec<f64>) -> Mdp {
        Mdp::new(
            2,
            1,
            vec![0.0, 1.0, 0.0, 1.0],
            Table::from_vec(2, 1, vec![0.0, 1.0]).unwrap(),
            0.5,
            rho,
        )
        .unwrap()
    }

    fn value_iteration(m: &Mdp) -> f64 {
        let mut v = vec![0.0; m.num_states()];
        loop {
            let q = m.q_from_v(&DVector::from_column_slice(&v));
            let next: Vec<f64> = (0..m.num_states())
                .map(|s| q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let gap = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if gap <= 1e-14 {
                break;
            }
        }
        m.rho().iter().zip(&v).map(|(a, b)| a * b).sum()
    }

    fn pseudo_random_mdp(ns: usize, na: usize, gamma: f64, seed: u64) -> Mdp {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut transitions = Vec::new();
        for _ in 0..ns * na {
            let row: Vec<f64> = (0..ns).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = row.iter().sum();
            transitions.extend(row.iter().map(|x| x / total));
        }
        let rewards = Table::from_vec(ns, na, (0..ns * na).map(|_| rng.random()).collect()).unwrap();
        Mdp::new(ns, na, transitions, rewards, gamma, vec![1.0 / ns as f64; ns]).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(Mdp::new(1, 1, vec![1.0], Table::filled(1, 1, 1.0), 0.5, vec![1.0]).is_ok());

        let err = Mdp::new(
            2,
            1,
            vec![0.0, 1.0, 0.0, 1.0],
            Table::filled(2, 1, 0.0),
            0.5,
            vec![1.0, 0.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("initial distribution not strictly positive"));

        let err = Mdp::new(1, 1, vec![1.0], Table::filled(1, 1, 1.5), 0.5, vec![1.0]).unwrap_err();
        assert!(err.to_string().contains("reward out of [0,1]"));

        for gamma in [0.0, 1.0] {
            assert!(Mdp::new(1, 1, vec![1.0], Table::filled(1, 1, 1.0), gamma, vec![1.0]).is_err());
        }
        let err = Mdp::new(1, 1, vec![0.9], Table::filled(1, 1, 1.0), 0.5, vec![1.0]).unwrap_err();
        assert!(err.to_string().contains("sums to"));
    }

    #[test]
    fn policy_value_examples() {
        let m = one_state(vec![1.0], 0.5);
        let report = policy_value(&m, &StatePolicy::uniform(1, 1)).unwrap();
        assert!((report.value - 2.0).abs() < 1e-14);
        assert!((report.visitation[0] - 1.0).abs() < 1e-14);

        let chain = two_state_chain(vec![1.0 - 1e-300, 1e-300]);
        let report = policy_value(&chain, &StatePolicy::uniform(2, 1)).unwrap();
        assert!((report.state_values[0] - 1.0).abs() < 1e-14);
        assert!((report.state_values[1] - 2.0).abs() < 1e-14);
        assert!((report.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn truncated_value_examples() {
        let m = one_state(vec![1.0], 0.5);
        let pi = StatePolicy::uniform(1, 1);
        assert!((truncated_value(&m, &pi, 2).unwrap() - 1.75).abs() < 1e-15);
        assert!((truncated_value(&m, &pi, 0).unwrap() - 1.0).abs() < 1e-15);

        let m = pseudo_random_mdp(3, 2, 0.9, 4);
        let pi = StatePolicy::uniform(3, 2);
        let f = policy_value(&m, &pi).unwrap().value;
        let mut prev = f64::NEG_INFINITY;
        for h in 0..200 {
            let fh = truncated_value(&m, &pi, h).unwrap();
            assert!(fh >= prev);
            assert!(f - fh <= 0.9f64.powi(h as i32 + 1) / 0.1 + 1e-12);
            prev = fh;
        }
    }

    #[test]
    fn solve_optimal_examples() {
        let (pi, f) = solve_optimal(&one_state(vec![1.0, 0.0], 0.5)).unwrap();
        assert_eq!(pi.argmax_actions(), vec![0]);
        assert!((f - 2.0).abs() < 1e-14);

        let zero = Mdp::new(2, 2, vec![0.5; 8], Table::zeros(2, 2), 0.7, vec![0.5, 0.5]).unwrap();
        let (pi, f) = solve_optimal(&zero).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(pi.argmax_actions(), vec![0, 0]);

        for seed in 0..5 {
            let m = pseudo_random_mdp(4, 3, 0.9, seed);
            let (_, f) = solve_optimal(&m).unwrap();
            assert!((f - value_iteration(&m)).abs() <= 1e-10);
        }
    }

    #[test]
    fn optimal_dominates_random_policies() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for seed in 0..3 {
            let m = pseudo_random_mdp(4, 3, 0.8, seed);
            let (_, f_star) = solve_optimal(&m).unwrap();
            for _ in 0..100 {
                let theta = Table::from_vec(4, 3, (0..12).map(|_| rng.random_range(-4.0..4.0)).collect()).unwrap();
                let pi = softmax_policy(&PolicyParams::new(theta).unwrap());
                let report = policy_value(&m, &pi).unwrap();
                assert!(report.value <= f_star + 1e-12);
                assert!(report.value >= 0.0 && report.value <= 1.0 / 0.2);
                assert!(report
                    .q_values
                    .as_slice()
                    .iter()
                    .all(|&q| (0.0..=5.0 + 1e-12).contains(&q)));
                let vsum: f64 = report.visitation.iter().sum();
                assert!((vsum - 1.0).abs() < 1e-12);
                let v_from_q: f64 = (0..4)
                    .map(|s| {
                        let vs: f64 = (0..3).map(|a| pi.prob(s, a) * report.q_values[(s, a)]).sum();
                        m.rho()[s] * vs
                    })
                    .sum();
                assert!((v_from_q - report.value).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mismatch_examples() {
        assert!((mismatch_coefficient(&one_state(vec![0.3], 0.9)).unwrap() - 1.0).abs() < 1e-14);

        // Power-series oracle: d = (1-g) sum_t g^t rho^T P^t, truncated at t = 200.
        let m = two_state_chain(vec![0.5, 0.5]);
        let mut mu = [0.5, 0.5];
        let mut d = [0.0f64, 0.0];
        let mut disc = 1.0;
        for _ in 0..=200 {
            d[0] += 0.5 * disc * mu[0];
            d[1] += 0.5 * disc * mu[1];
            mu = [0.0, mu[0] + mu[1]];
            disc *= 0.5;
        }
        let expected = (d[0] / 0.5).max(d[1] / 0.5);
        assert!((mismatch_coefficient(&m).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.5).abs() < 1e-14);

        let m = pseudo_random_mdp(5, 2, 0.9, 11);
        assert!(mismatch_coefficient(&m).unwrap() <= 5.0 + 1e-12);
    }

    #[test]
    fn exact_gradient_examples() {
        let m = one_state(vec![0.4], 0.5);
        let g = exact_regularized_gradient(&m, &PolicyParams::zeros(1, 1), 0.3).unwrap();
        assert_eq!(g.max_abs(), 0.0);

        // F = 2 pi_1, d pi_1 / d theta_1 = pi_1 (1 - pi_1)
        let m = one_state(vec![1.0, 0.0], 0.5);
        let g = exact_regularized_gradient(&m, &PolicyParams::zeros(1, 2), 0.0).unwrap();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((g[(0, 1)] + 0.5).abs() < 1e-14);

        // uniform rows: barrier part vanishes, so lambda does not matter
        let m = pseudo_random_mdp(3, 3, 0.9, 2);
        let g0 = exact_regularized_gradient(&m, &PolicyParams::zeros(3, 3), 0.0).unwrap();
        let g1 = exact_regularized_gradient(&m, &PolicyParams::zeros(3, 3), 0.7).unwrap();
        assert!(g0.sub(&g1).max_abs() < 1e-15);

        assert!(exact_regularized_gradient(&m, &PolicyParams::zeros(3, 3), -1.0).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = pseudo_random_mdp(3, 2, 0.93, 17);
        let text = m.to_json().unwrap();
        let back = Mdp::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = one_state(vec![1.0], 0.5);
        assert!(policy_value(&m, &StatePolicy::uniform(2, 1)).is_err());
    }
}
