//! Exact solution of small instances by Q-value iteration, and exact
//! evaluation of stationary deterministic policies.
//!
//! Occupancies evolve deterministically, so a backup for `(s, a)` only sums
//! over the `|S_e|` background successors of `s`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::config::{Action, BackgroundChain, BankConfig, State};
use crate::env::{apply_action, feasible_actions, reward};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("state space has {count} states, above the cap of {cap}")]
    TooManyStates { count: u128, cap: u64 },
    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: u64, residual: f64 },
    #[error("policy chose infeasible action {action} in state {index}")]
    InfeasibleAction { index: usize, action: Action },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once a sweep changes no entry by more than this.
    pub tol: f64,
    pub max_sweeps: u64,
    pub state_cap: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
            state_cap: 1_000_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Bijection between `0..len()` and `(x, b)`, with `x` slowest and the last
/// battery fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    num_bg: usize,
    capacities: Vec<i64>,
    strides: Vec<usize>,
    per_bg: usize,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.num_bg * self.per_bg
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of occupancy vectors.
    pub fn occupancy_count(&self) -> usize {
        self.per_bg
    }

    pub fn state(&self, index: usize) -> State {
        let x = index / self.per_bg;
        let mut rest = index % self.per_bg;
        let b = self
            .strides
            .iter()
            .map(|&stride| {
                let v = rest / stride;
                rest %= stride;
                v as i64
            })
            .collect();
        State::new(x, b)
    }

    pub fn occupancy_index(&self, b: &[i64]) -> usize {
        b.iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v as usize * s)
            .sum()
    }

    pub fn index(&self, s: &State) -> usize {
        s.x * self.per_bg + self.occupancy_index(&s.b)
    }

    pub fn capacities(&self) -> &[i64] {
        &self.capacities
    }
}

pub fn enumerate_states(
    bank: &BankConfig,
    chain: &BackgroundChain,
    cap: u64,
) -> Result<StateSpace, OracleError> {
    let count = bank.batteries.iter().fold(chain.len() as u128, |acc, b| {
        acc.saturating_mul(u128::from(b.capacity) + 1)
    });
    if count > u128::from(cap) {
        return Err(OracleError::TooManyStates { count, cap });
    }
    let capacities: Vec<i64> = bank
        .batteries
        .iter()
        .map(|b| i64::from(b.capacity))
        .collect();
    let mut strides = vec![1usize; capacities.len()];
    for i in (0..capacities.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * (capacities[i + 1] as usize + 1);
    }
    let per_bg = capacities.iter().map(|&c| c as usize + 1).product();
    Ok(StateSpace {
        num_bg: chain.len(),
        capacities,
        strides,
        per_bg,
    })
}

/// Tabulated MDP: every feasible action of every state, its reward, and the
/// occupancy it leads to.
#[derive(Debug, Clone)]
pub struct ExactModel {
    space: StateSpace,
    gamma: f64,
    transition: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    actions: Vec<Action>,
    rewards: Vec<f64>,
    next_occupancy: Vec<usize>,
}

impl ExactModel {
    pub fn build(
        bank: &BankConfig,
        chain: &BackgroundChain,
        state_cap: u64,
    ) -> Result<Self, OracleError> {
        let space = enumerate_states(bank, chain, state_cap)?;
        let mut offsets = Vec::with_capacity(space.len() + 1);
        let mut actions = Vec::new();
        let mut rewards = Vec::new();
        let mut next_occupancy = Vec::new();
        offsets.push(0);
        for i in 0..space.len() {
            let s = space.state(i);
            for a in feasible_actions(bank, chain, &s) {
                rewards.push(reward(bank, &s, &a));
                next_occupancy.push(space.occupancy_index(&apply_action(bank, &s.b, &a)));
                actions.push(a);
            }
            offsets.push(actions.len());
        }
        Ok(Self {
            space,
            gamma: bank.gamma,
            transition: chain.transition.clone(),
            offsets,
            actions,
            rewards,
            next_occupancy,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn num_pairs(&self) -> usize {
        self.actions.len()
    }

    /// Feasible actions of state `index`, in lexicographic order.
    pub fn actions(&self, index: usize) -> &[Action] {
        &self.actions[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn rewards(&self, index: usize) -> &[f64] {
        &self.rewards[self.offsets[index]..self.offsets[index + 1]]
    }

    /// `max_a q(s, a)` for every state.
    pub fn state_values(&self, q: &[f64]) -> Vec<f64> {
        (0..self.space.len())
            .map(|i| {
                q[self.offsets[i]..self.offsets[i + 1]]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Expected value of the successor of pair `pair` in state `index`.
    fn expected_next(&self, index: usize, pair: usize, v: &[f64]) -> f64 {
        let x = index / self.space.per_bg;
        let occ = self.next_occupancy[pair];
        self.transition[x]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(y, &p)| p * v[y * self.space.per_bg + occ])
            .sum()
    }

    /// One synchronous sweep of the Bellman optimality operator. Returns the
    /// new table and the sup-norm change.
    pub fn bellman_backup(&self, q: &[f64]) -> (Vec<f64>, f64) {
        let v = self.state_values(q);
        let mut next = vec![0.0; q.len()];
        let mut delta: f64 = 0.0;
        for i in 0..self.space.len() {
            for pair in self.offsets[i]..self.offsets[i + 1] {
                let updated = self.rewards[pair] + self.gamma * self.expected_next(i, pair, &v);
                delta = delta.max((updated - q[pair]).abs());
                next[pair] = updated;
            }
        }
        (next, delta)
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<ExactSolution, OracleError> {
        let mut q = vec![0.0; self.num_pairs()];
        let mut sweeps = 0;
        loop {
            let (next, delta) = self.bellman_backup(&q);
            q = next;
            sweeps += 1;
            if delta <= opts.tol {
                return Ok(ExactSolution {
                    q,
                    offsets: self.offsets.clone(),
                    residual: delta,
                    iterations: sweeps,
                    gamma: self.gamma,
                    tol: opts.tol,
                });
            }
            if sweeps >= opts.max_sweeps {
                return Err(OracleError::NotConverged {
                    sweeps,
                    residual: delta,
                });
            }
        }
    }

    /// Index into [`ExactModel::actions`] of the action `policy` picks in
    /// every state.
    pub fn policy_choices(
        &self,
        mut policy: impl FnMut(&State) -> Action,
    ) -> Result<Vec<usize>, OracleError> {
        (0..self.space.len())
            .map(|i| {
                let a = policy(&self.space.state(i));
                self.actions(i)
                    .binary_search(&a)
                    .map_err(|_| OracleError::InfeasibleAction {
                        index: i,
                        action: a,
                    })
            })
            .collect()
    }

    /// Value of the stationary policy given by per-state action indices, by
    /// iterating its Bellman operator from zero until a sweep moves no entry
    /// by more than `opts.tol`.
    pub fn evaluate_choices(
        &self,
        choices: &[usize],
        opts: &SolverOptions,
    ) -> Result<Vec<f64>, OracleError> {
        let n = self.space.len();
        let mut v = vec![0.0; n];
        let mut sweeps = 0;
        loop {
            let mut delta: f64 = 0.0;
            let next: Vec<f64> = (0..n)
                .map(|i| {
                    let pair = self.offsets[i] + choices[i];
                    let updated = self.rewards[pair] + self.gamma * self.expected_next(i, pair, &v);
                    delta = delta.max((updated - v[i]).abs());
                    updated
                })
                .collect();
            v = next;
            sweeps += 1;
            if delta <= opts.tol {
                return Ok(v);
            }
            if sweeps >= opts.max_sweeps {
                return Err(OracleError::NotConverged {
                    sweeps,
                    residual: delta,
                });
            }
        }
    }

    pub fn evaluate_policy(
        &self,
        policy: impl FnMut(&State) -> Action,
        opts: &SolverOptions,
    ) -> Result<Vec<f64>, OracleError> {
        let choices = self.policy_choices(policy)?;
        self.evaluate_choices(&choices, opts)
    }

    /// Audit rows: one per state with its best action and optimal value.
    pub fn solution_rows(&self, sol: &ExactSolution) -> Vec<SolutionRow> {
        (0..self.space.len())
            .map(|i| {
                let s = self.space.state(i);
                let best = sol.best_action_index(i);
                SolutionRow {
                    index: i,
                    x: s.x,
                    b: s.b,
                    best_action: self.actions(i)[best].clone(),
                    value: sol.value(i),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRow {
    pub index: usize,
    pub x: usize,
    pub b: Vec<i64>,
    pub best_action: Action,
    pub value: f64,
}

/// Converged Q table, indexed by state and position in that state's
/// feasible-action list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    q: Vec<f64>,
    offsets: Vec<usize>,
    /// Sup-norm change of the final sweep.
    pub residual: f64,
    pub iterations: u64,
    gamma: f64,
    tol: f64,
}

impl ExactSolution {
    pub fn q(&self, index: usize) -> &[f64] {
        &self.q[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn value(&self, index: usize) -> f64 {
        self.q(index)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.num_states()).map(|i| self.value(i)).collect()
    }

    /// First maximiser of `q(index, .)`.
    pub fn best_action_index(&self, index: usize) -> usize {
        let row = self.q(index);
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        best
    }

    /// Value-suboptimality bound of the policy greedy in `q`:
    /// `2 gamma tol / (1 - gamma)`.
    pub fn suboptimality_bound(&self) -> f64 {
        2.0 * self.gamma * self.tol / (1.0 - self.gamma)
    }
}

pub fn solve_q_iteration(
    bank: &BankConfig,
    chain: &BackgroundChain,
    tol: f64,
) -> Result<ExactSolution, OracleError> {
    let opts = SolverOptions::default().with_tol(tol);
    ExactModel::build(bank, chain, opts.state_cap)?.solve(&opts)
}

/// Exact value table of a deterministic stationary policy, in
/// [`StateSpace`] order.
pub fn evaluate_policy_exact(
    bank: &BankConfig,
    chain: &BackgroundChain,
    policy: impl FnMut(&State) -> Action,
    tol: f64,
) -> Result<Vec<f64>, OracleError> {
    let opts = SolverOptions::default().with_tol(tol);
    ExactModel::build(bank, chain, opts.state_cap)?.evaluate_policy(policy, &opts)
}
