//! Online semi-gradient Q-learning of the linear weights.
//!
//! Each step the behaviour policy is ε-greedy in the current estimate; the
//! background chain is sampled afresh (no replay) and the weights move along
//! `beta_k * delta_k * phi(s_k, a_k)`, where `delta_k` is the one-step
//! temporal-difference error against the bootstrapped greedy target.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use thiserror::Error;

use crate::chain::sample_next;
use crate::config::{Action, BackgroundChain, BankConfig, State};
use crate::env::{feasible_actions, reward, step};
use crate::features::{feature_vector, q_hat, DimensionMismatch, FeatureVector, WeightVector};
use crate::policies::epsilon_greedy_action;
use crate::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error("weights became non-finite at step {step}")]
    NonFiniteWeights { step: u64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Step-size and exploration schedules for one training run.
///
/// `beta_k = beta0 * beta_tau / (beta_tau + k)` is a Robbins-Monro sequence
/// (its sum diverges, its sum of squares converges).
/// `eps_k = max(eps_min, eps0 * exp(-k / eps_decay))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnSchedule {
    pub steps: u64,
    pub beta0: f64,
    pub beta_tau: f64,
    pub eps0: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
    pub seed: u64,
    /// Divide each step by `max(1, |phi_k|^2)`. The reward features grow
    /// with bank size, so without this the effective step of the plain rule
    /// scales with `N^2` and large constrained banks diverge.
    pub normalize_step: bool,
}

impl Default for LearnSchedule {
    fn default() -> Self {
        Self {
            steps: 100_000,
            beta0: 0.6,
            beta_tau: 1_000.0,
            eps0: 1.0,
            eps_min: 0.02,
            eps_decay: 20_000.0,
            seed: 0,
            normalize_step: true,
        }
    }
}

impl LearnSchedule {
    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn beta(&self, k: u64) -> f64 {
        self.beta0 * self.beta_tau / (self.beta_tau + k as f64)
    }

    pub fn epsilon(&self, k: u64) -> f64 {
        (self.eps0 * libm::exp(-(k as f64) / self.eps_decay)).max(self.eps_min)
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |msg: String| Err(LearnError::InvalidSchedule(msg));
        if !(self.beta0 > 0.0 && self.beta0 < 1.0) {
            return bad(format!("beta0 must lie in (0, 1), got {}", self.beta0));
        }
        if !(self.beta_tau > 0.0 && self.beta_tau.is_finite()) {
            return bad(format!("beta_tau must be positive, got {}", self.beta_tau));
        }
        if !(0.0..=1.0).contains(&self.eps0) || !(0.0..=1.0).contains(&self.eps_min) {
            return bad(format!(
                "eps0 and eps_min must lie in [0, 1], got {} and {}",
                self.eps0, self.eps_min
            ));
        }
        if self.eps_min > self.eps0 {
            return bad(format!(
                "eps_min {} exceeds eps0 {}",
                self.eps_min, self.eps0
            ));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN as well
        if !(self.eps_decay > 0.0) {
            return bad(format!(
                "eps_decay must be positive, got {}",
                self.eps_decay
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogEntry {
    /// Steps completed.
    pub step: u64,
    pub epsilon: f64,
    pub beta: f64,
    /// Mean |TD error| over the logging window that ends at `step`.
    pub mean_abs_td: f64,
    /// Training reward accumulated since step 0.
    pub cum_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Steps per logging window.
    pub interval: u64,
    pub entries: Vec<TrainLogEntry>,
}

impl TrainLog {
    pub const DEFAULT_INTERVAL: u64 = 1_000;

    pub fn final_cum_reward(&self) -> Option<f64> {
        self.entries.last().map(|e| e.cum_reward)
    }

    /// Mean of the window means over the first `windows` entries.
    pub fn head_mean_abs_td(&self, windows: usize) -> Option<f64> {
        mean_of(self.entries.iter().take(windows).map(|e| e.mean_abs_td))
    }

    /// Mean of the window means over the last `windows` entries.
    pub fn tail_mean_abs_td(&self, windows: usize) -> Option<f64> {
        let skip = self.entries.len().saturating_sub(windows);
        mean_of(self.entries.iter().skip(skip).map(|e| e.mean_abs_td))
    }
}

fn mean_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = it.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

fn max_q(
    bank: &BankConfig,
    chain: &BackgroundChain,
    s: &State,
    w: &WeightVector,
) -> Result<f64, DimensionMismatch> {
    let mut best = f64::NEG_INFINITY;
    for a in feasible_actions(bank, chain, s) {
        best = best.max(q_hat(&feature_vector(bank, chain, s, &a), w)?);
    }
    Ok(best)
}

/// `R(s,a) + gamma * max_a' Qhat(s', a') - Qhat(s, a)`.
pub fn td_error(
    bank: &BankConfig,
    chain: &BackgroundChain,
    s: &State,
    a: &Action,
    s_next: &State,
    w: &WeightVector,
) -> Result<f64, DimensionMismatch> {
    let current = q_hat(&feature_vector(bank, chain, s, a), w)?;
    let next = max_q(bank, chain, s_next, w)?;
    Ok(reward(bank, s, a) + bank.gamma * next - current)
}

/// `w += beta * delta * phi`; only the support of `phi` is touched.
pub fn update_weights(
    w: &mut WeightVector,
    phi: &FeatureVector,
    delta: f64,
    beta: f64,
) -> Result<(), DimensionMismatch> {
    if phi.dim() != w.dim() {
        return Err(DimensionMismatch {
            features: phi.dim(),
            weights: w.dim(),
        });
    }
    let scale = beta * delta;
    for (i, v) in phi.support() {
        w.0[i] += scale * v;
    }
    Ok(())
}

/// Run `schedule.steps` steps of ε-greedy semi-gradient Q-learning from
/// `(x0, b0)` with zero-initialised weights.
pub fn train(
    bank: &BankConfig,
    chain: &BackgroundChain,
    schedule: &LearnSchedule,
    x0: usize,
    b0: &[i64],
) -> Result<(WeightVector, TrainLog), LearnError> {
    schedule.validate()?;
    let mut rng = SimRng::seed_from_u64(schedule.seed);
    let mut w = WeightVector::for_model(bank, chain);
    let mut log = TrainLog {
        interval: TrainLog::DEFAULT_INTERVAL,
        entries: Vec::new(),
    };
    let mut s = State::new(x0, b0.to_vec());
    let mut cum_reward = 0.0;
    let mut window_abs_td = 0.0;
    let mut window_len = 0u64;

    for k in 0..schedule.steps {
        let eps = schedule.epsilon(k);
        let beta = schedule.beta(k);
        let a = epsilon_greedy_action(bank, chain, &s, &w, eps, &mut rng)?;
        let next_x = sample_next(chain, s.x, &mut rng);
        let (s_next, r) = step(bank, &s, &a, next_x);

        let phi = feature_vector(bank, chain, &s, &a);
        let delta = r + bank.gamma * max_q(bank, chain, &s_next, &w)? - q_hat(&phi, &w)?;
        let step_size = if schedule.normalize_step {
            beta / phi.support().map(|(_, v)| v * v).sum::<f64>().max(1.0)
        } else {
            beta
        };
        update_weights(&mut w, &phi, delta, step_size)?;
        if !delta.is_finite() || !phi.support().all(|(i, _)| w.0[i].is_finite()) {
            return Err(LearnError::NonFiniteWeights { step: k });
        }

        cum_reward += r;
        window_abs_td += delta.abs();
        window_len += 1;
        if (k + 1) % log.interval == 0 {
            log.entries.push(TrainLogEntry {
                step: k + 1,
                epsilon: eps,
                beta,
                mean_abs_td: window_abs_td / window_len as f64,
                cum_reward,
            });
            window_abs_td = 0.0;
            window_len = 0;
        }
        s = s_next;
    }
    if window_len > 0 {
        let k = schedule.steps - 1;
        log.entries.push(TrainLogEntry {
            step: schedule.steps,
            epsilon: schedule.epsilon(k),
            beta: schedule.beta(k),
            mean_abs_td: window_abs_td / window_len as f64,
            cum_reward,
        });
    }
    Ok((w, log))
}
