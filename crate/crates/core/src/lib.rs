//! Phased REINFORCE policy gradient on finite tabular MDPs.
//!
//! The crate has two halves. The learner side samples trajectories under a
//! soft-max policy, forms REINFORCE gradient estimates of the log-barrier
//! regularized objective and runs stochastic gradient ascent in phases of
//! doubling length. The oracle side solves the MDP exactly (policy values,
//! optimal values, exact regularized gradients, exhaustive trajectory
//! enumeration) so that regret and every estimator bound can be computed
//! without Monte Carlo noise.
//!
//! Modules:
//!
//! - [`mdp`]: MDP model, exact evaluation, optimal control, exact gradient
//! - [`policy`]: soft-max parametrization, log-barrier, post-processing
//! - [`rollout`]: seeded trajectory sampling and the horizon schedule
//! - [`estimator`]: REINFORCE gradients, baselines, bound constants
//! - [`optimizer`]: single-trajectory, phased and mini-batch ascent loops
//! - [`regret`]: exact regret ledger and trend diagnostics
//! - [`oracle`]: finite differences and trajectory enumeration
//! - [`harness`]: experiment configs, built-in environments, exports
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod harness;
pub mod mdp;
pub mod optimizer;
pub mod oracle;
pub mod policy;
pub mod regret;
pub mod rollout;
pub mod table;

pub use error::{Error, Result};
pub use estimator::{
    lemma_constants, minibatch_gradient, reinforce_gradient, reward_to_go, reward_to_go_all, Baseline, BaselineTracker,
    BoundConstants, EstimatorConfig,
};
pub use mdp::{Mdp, StatePolicy, ValueReport};
pub use optimizer::{
    global_to_index, index_to_global, run_minibatch, run_phased, run_single, smoothness_constant, EpisodeLog,
    PhasePlan, RunRecord,
};
pub use oracle::{enumerate_estimator, finite_difference_gradient, EnumerationReport};
pub use policy::{PolicyParams, PostProcessConfig};
pub use regret::RegretLedger;
pub use rollout::{horizon_schedule, sample_batch, sample_trajectory, SeedSpec, Trajectory};
pub use table::Table;
