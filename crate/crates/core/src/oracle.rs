//! Ground truth for the estimator: central finite differences of the
//! regularized objective, and exhaustive enumeration of every trajectory of
//! a fixed horizon to get exact estimator moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{reinforce_gradient_with_policy, BoundConstants, EstimatorConfig};
use crate::mdp::{regularized_objective, Mdp};
use crate::policy::{softmax_policy, PolicyParams};
use crate::rollout::Trajectory;
use crate::table::Table;

/// Largest number of trajectories [`enumerate_estimator`] will visit.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Central differences of `L_lambda(theta) = F(pi_theta) + lambda R(theta)`.
pub fn finite_difference_gradient(m: &Mdp, theta: &PolicyParams, lambda: f64, h: f64) -> Result<Table> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be > 0, got {h}")));
    }
    let base = theta.table();
    let mut out = Table::zeros(base.rows(), base.cols());
    for i in 0..base.as_slice().len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus.as_mut_slice()[i] += h;
        minus.as_mut_slice()[i] -= h;
        let fp = regularized_objective(m, &PolicyParams::new(plus)?, lambda)?;
        let fm = regularized_objective(m, &PolicyParams::new(minus)?, lambda)?;
        out.as_mut_slice()[i] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

/// Finite differences at `h` and `h/2` plus their relative disagreement,
/// which flags a step size that is too coarse or too fine.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoScaleGradient {
    pub coarse: Table,
    pub fine: Table,
    pub disagreement: f64,
}

pub fn two_scale_gradient(m: &Mdp, theta: &PolicyParams, lambda: f64, h: f64) -> Result<TwoScaleGradient> {
    let coarse = finite_difference_gradient(m, theta, lambda, h)?;
    let fine = finite_difference_gradient(m, theta, lambda, h / 2.0)?;
    let disagreement = coarse.sub(&fine).norm() / fine.norm().max(1e-12);
    Ok(TwoScaleGradient {
        coarse,
        fine,
        disagreement,
    })
}

/// `||a - b|| / max(||b||, floor)`
pub fn relative_error(a: &Table, b: &Table, floor: f64) -> f64 {
    a.sub(b).norm() / b.norm().max(floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    /// `E[g]`
    pub mean_gradient: Table,
    /// `E ||g||^2`
    pub second_moment: f64,
    /// `E ||g - E g||^2`
    pub trace_covariance: f64,
    pub total_probability: f64,
    /// Trajectories with positive probability.
    pub atoms: u64,
}

fn atom_count(m: &Mdp, horizon: usize) -> f64 {
    let per_step = (m.num_states() * m.num_actions()) as f64;
    per_step.powi(horizon as i32 + 1)
}

/// Exact moments of the REINFORCE estimate over all trajectories of the
/// given horizon. Baselines are resolved without any run history.
pub fn enumerate_estimator(
    m: &Mdp,
    theta: &PolicyParams,
    lambda: f64,
    cfg: &EstimatorConfig,
    horizon: usize,
) -> Result<EnumerationReport> {
    cfg.validate(m.num_states())?;
    let baseline = cfg.baseline_values(m.num_states(), None);
    enumerate_with_baseline(m, theta, lambda, cfg.beta, &baseline, horizon)
}

pub fn enumerate_with_baseline(
    m: &Mdp,
    theta: &PolicyParams,
    lambda: f64,
    beta: f64,
    baseline: &[f64],
    horizon: usize,
) -> Result<EnumerationReport> {
    let atoms = atom_count(m, horizon);
    if atoms > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            atoms,
            limit: ENUMERATION_LIMIT,
        });
    }
    if baseline.len() != m.num_states() {
        return Err(Error::InvalidParameter("baseline length must equal S".into()));
    }
    let pi = softmax_policy(theta);
    let mut walker = Walker {
        m,
        pi: &pi,
        lambda,
        beta,
        baseline,
        horizon,
        traj: Trajectory {
            states: Vec::with_capacity(horizon + 1),
            actions: Vec::with_capacity(horizon + 1),
            rewards: Vec::with_capacity(horizon + 1),
        },
        mean: Table::zeros(m.num_states(), m.num_actions()),
        second: 0.0,
        total: 0.0,
        atoms: 0,
    };
    for (s0, &p0) in m.rho().iter().enumerate() {
        if p0 > 0.0 {
            walker.visit(s0, p0);
        }
    }
    let trace_covariance = walker.second - walker.mean.norm_sq();
    Ok(EnumerationReport {
        mean_gradient: walker.mean,
        second_moment: walker.second,
        trace_covariance,
        total_probability: walker.total,
        atoms: walker.atoms,
    })
}

struct Walker<'a> {
    m: &'a Mdp,
    pi: &'a crate::mdp::StatePolicy,
    lambda: f64,
    beta: f64,
    baseline: &'a [f64],
    horizon: usize,
    traj: Trajectory,
    mean: Table,
    second: f64,
    total: f64,
    atoms: u64,
}

impl Walker<'_> {
    /// Depth-first over actions then successor states, in index order.
    fn visit(&mut self, s: usize, prob: f64) {
        let t = self.traj.states.len();
        for a in 0..self.m.num_actions() {
            let pa = self.pi.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            self.traj.states.push(s);
            self.traj.actions.push(a);
            self.traj.rewards.push(self.m.reward(s, a));
            let p = prob * pa;
            if t == self.horizon {
                let g = reinforce_gradient_with_policy(
                    &self.traj,
                    self.pi,
                    self.lambda,
                    self.m.gamma(),
                    self.beta,
                    self.baseline,
                );
                self.mean.add_scaled(p, &g);
                self.second += p * g.norm_sq();
                self.total += p;
                self.atoms += 1;
            } else {
                let next = self.m.next_state_dist(s, a).to_vec();
                for (s2, &ps) in next.iter().enumerate() {
                    if ps > 0.0 {
                        self.visit(s2, p * ps);
                    }
                }
            }
            self.traj.states.pop();
            self.traj.actions.pop();
            self.traj.rewards.pop();
        }
    }
}

/// `E||g||^2 <= M1 + M2 ||grad L||^2`
pub fn check_second_moment(report: &EnumerationReport, exact_gradient: &Table, constants: &BoundConstants) -> bool {
    report.second_moment <= constants.second_moment_bound(exact_gradient.norm_sq())
}

/// One inequality `lhs <= rhs` with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            passed: lhs <= rhs,
        }
    }
}

impl std::fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<6} {:<40} lhs = {:.6e}  rhs = {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.lhs,
            self.rhs
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{lemma_constants, Baseline};
    use crate::mdp::exact_regularized_gradient;

    fn one_state_two_actions(gamma: f64) -> Mdp {
        Mdp::new(
            1,
            2,
            vec![1.0, 1.0],
            Table::from_vec(1, 2, vec![1.0, 0.0]).unwrap(),
            gamma,
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn single_action_fd_is_zero() {
        let m = Mdp::new(1, 1, vec![1.0], Table::filled(1, 1, 0.5), 0.5, vec![1.0]).unwrap();
        let g = finite_difference_gradient(&m, &PolicyParams::zeros(1, 1), 0.2, 1e-5).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(finite_difference_gradient(&m, &PolicyParams::zeros(1, 1), 0.2, 0.0).is_err());
    }

    #[test]
    fn fd_matches_closed_form_on_bandit() {
        let m = one_state_two_actions(0.5);
        let theta = PolicyParams::zeros(1, 2);
        let fd = two_scale_gradient(&m, &theta, 0.0, 1e-5).unwrap();
        assert!((fd.fine[(0, 0)] - 0.5).abs() < 1e-8);
        assert!(fd.disagreement < 1e-6);
        let exact = exact_regularized_gradient(&m, &theta, 0.0).unwrap();
        assert!(relative_error(&exact, &fd.fine, 1e-12) < 1e-8);
    }

    #[test]
    fn flat_rewards_leave_only_the_barrier() {
        let m = Mdp::new(
            2,
            2,
            vec![0.3, 0.7, 0.5, 0.5, 1.0, 0.0, 0.2, 0.8],
            Table::filled(2, 2, 0.6),
            0.8,
            vec![0.4, 0.6],
        )
        .unwrap();
        let theta = PolicyParams::new(Table::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.1]]).unwrap()).unwrap();
        let fd = finite_difference_gradient(&m, &theta, 0.3, 1e-5).unwrap();
        let mut expected = crate::policy::regularizer_gradient(&theta);
        expected.scale(0.3);
        assert!(relative_error(&fd, &expected, 1e-12) < 1e-7);
    }

    #[test]
    fn enumeration_totals_and_guard() {
        let m = one_state_two_actions(0.5);
        let theta = PolicyParams::new(Table::from_rows(&[vec![0.4, -0.2]]).unwrap()).unwrap();
        let cfg = EstimatorConfig::default();
        let r = enumerate_estimator(&m, &theta, 0.1, &cfg, 3).unwrap();
        assert!((r.total_probability - 1.0).abs() < 1e-12);
        assert_eq!(r.atoms, 16);
        assert!(r.trace_covariance >= -1e-12);
        let err = enumerate_estimator(&m, &theta, 0.1, &cfg, 30).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { .. }));
    }

    #[test]
    fn bandit_bias_and_baseline() {
        let m = one_state_two_actions(0.5);
        let theta = PolicyParams::zeros(1, 2);
        let lambda = 0.1;
        let exact = exact_regularized_gradient(&m, &theta, lambda).unwrap();
        let zero = EstimatorConfig::default();
        let r0 = enumerate_estimator(&m, &theta, lambda, &zero, 3).unwrap();
        let c = lemma_constants(0.5, lambda, 0.0, 1).unwrap();
        assert!(r0.mean_gradient.sub(&exact).norm() <= c.bias_bound(0.5, 3));

        let shifted = EstimatorConfig {
            baseline: Baseline::Constant { value: 0.7 },
            baseline_bound: 0.7,
            ..zero
        };
        let r1 = enumerate_estimator(&m, &theta, lambda, &shifted, 3).unwrap();
        assert!(r1.mean_gradient.sub(&r0.mean_gradient).max_abs() <= 1e-10);
    }

    #[test]
    fn second_moment_negative_control() {
        let m = one_state_two_actions(0.5);
        let theta = PolicyParams::zeros(1, 2);
        let r = enumerate_estimator(&m, &theta, 0.0, &EstimatorConfig::default(), 2).unwrap();
        let exact = exact_regularized_gradient(&m, &theta, 0.0).unwrap();
        let mut c = lemma_constants(0.5, 0.0, 0.0, 1).unwrap();
        assert!(check_second_moment(&r, &exact, &c));
        c.m1 = 0.0;
        c.m2 = 0.0;
        assert!(r.trace_covariance > 0.0);
        assert!(!check_second_moment(&r, &exact, &c));
    }

    #[test]
    fn degenerate_second_moment() {
        let m = Mdp::new(1, 1, vec![1.0], Table::filled(1, 1, 1.0), 0.5, vec![1.0]).unwrap();
        let theta = PolicyParams::zeros(1, 1);
        let r = enumerate_estimator(&m, &theta, 0.2, &EstimatorConfig::default(), 4).unwrap();
        let exact = exact_regularized_gradient(&m, &theta, 0.2).unwrap();
        assert_eq!(exact.norm(), 0.0);
        assert!(r.second_moment <= lemma_constants(0.5, 0.2, 0.0, 1).unwrap().m1);
    }
}
