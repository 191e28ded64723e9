//! Heterogeneous battery-bank management as a finite Markov decision process.
//!
//! A bank of `N` integer-quantised batteries absorbs or supplies the net
//! generation of a Markov-modulated background process. Each step the bank
//! must match the net generation as far as its ramp and capacity limits
//! allow; how that energy is split across batteries is the control decision,
//! and running a battery near empty or full is penalised.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. Modules:
//!
//! - [`config`]: domain types, validation, projection arithmetic.
//! - [`chain`]: the background Markov chain and seeded trajectories.
//! - [`env`]: feasible actions, battery evolution, cycling penalty.
//! - [`features`]: the quartic kernel feature map and linear Q estimate.
//! - [`policies`]: greedy, naive proportional, learned, and ε-greedy control.
//! - [`learner`]: online semi-gradient Q-learning of the weights.
//! - [`oracle`]: exact Q-value iteration and policy evaluation.
//! - [`harness`]: coupled-trajectory policy comparison.
//! - [`reference`]: the four-state background chain and bank presets used
//!   in the case study.

#![no_std]

extern crate alloc;

pub mod chain;
pub mod config;
pub mod env;
pub mod features;
pub mod harness;
pub mod learner;
pub mod oracle;
pub mod policies;
pub mod reference;

pub use chain::{generate_trajectory, net_generation, sample_next, Trajectory};
pub use config::{
    clip, config_fingerprint, validate_config, Action, BackgroundChain, BankConfig, BatteryConfig,
    InitialOccupancy, State, ValidationReport, Violation,
};
pub use env::{action_bounds, apply_action, feasible_actions, reward, step, ActionBounds};
pub use features::{
    feature_dimension, feature_vector, kernel_pair, normalized_occupancy, q_hat, DimensionMismatch,
    FeatureVector, WeightVector,
};
pub use harness::{
    compare_policies, coupled_rollout, run_job, run_job_with_weights, ComparisonRow,
    ComparisonSpec, ComparisonTable, EvalReport, HarnessError, PolicyTotals, RowFailure,
    RowOutcome,
};
pub use learner::{
    td_error, train, update_weights, LearnError, LearnSchedule, TrainLog, TrainLogEntry,
};
pub use oracle::{
    enumerate_states, evaluate_policy_exact, solve_q_iteration, ExactModel, ExactSolution,
    OracleError, SolutionRow, SolverOptions, StateSpace,
};
pub use policies::{
    epsilon_greedy_action, greedy_action, naive_action, rl_action, Policy, PolicyKind,
};

/// Seedable generator used for every random stream in the crate.
///
/// ChaCha with 8 rounds: portable, platform-independent output for a given
/// 64-bit seed.
pub type SimRng = rand_chacha::ChaCha8Rng;
