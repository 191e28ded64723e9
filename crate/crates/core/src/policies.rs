//! Deployable controllers. Ties are always broken toward the
//! lexicographically smallest action, which is the first one in the order
//! produced by [`feasible_actions`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::config::{Action, BackgroundChain, BankConfig, State};
use crate::env::{action_bounds, feasible_actions, reward};
use crate::features::{feature_dimension, feature_vector, q_hat, DimensionMismatch, WeightVector};

/// First maximiser of `score` over `actions`.
fn first_argmax<E>(
    actions: Vec<Action>,
    mut score: impl FnMut(&Action) -> Result<f64, E>,
) -> Result<Action, E> {
    let mut best: Option<(Action, f64)> = None;
    for a in actions {
        let v = score(&a)?;
        match &best {
            Some((_, bv)) if v <= *bv => {}
            _ => best = Some((a, v)),
        }
    }
    Ok(best.expect("feasible action set is never empty").0)
}

/// Maximiser of the instantaneous reward.
pub fn greedy_action(bank: &BankConfig, chain: &BackgroundChain, s: &State) -> Action {
    let actions = feasible_actions(bank, chain, s);
    first_argmax::<core::convert::Infallible>(actions, |a| Ok(reward(bank, s, a)))
        .unwrap_or_else(|e| match e {})
}

/// Split the target proportionally to capacity; if the rounded split is
/// infeasible, fall back to the feasible action nearest in L1 to the
/// unrounded split.
pub fn naive_action(bank: &BankConfig, chain: &BackgroundChain, s: &State) -> Action {
    let target = action_bounds(bank, chain, s).target as f64;
    let total_capacity: f64 = bank.batteries.iter().map(|b| f64::from(b.capacity)).sum();
    let ideal: Vec<f64> = bank
        .batteries
        .iter()
        .map(|b| target * f64::from(b.capacity) / total_capacity)
        .collect();
    let rounded = Action(ideal.iter().map(|&t| round_half_toward_zero(t)).collect());

    let actions = feasible_actions(bank, chain, s);
    if actions.binary_search(&rounded).is_ok() {
        return rounded;
    }
    let mut best: Option<(Action, f64)> = None;
    for a in actions {
        let dist: f64 =
            a.0.iter()
                .zip(&ideal)
                .map(|(&v, &t)| libm::fabs(v as f64 - t))
                .sum();
        match &best {
            Some((_, bd)) if dist >= *bd => {}
            _ => best = Some((a, dist)),
        }
    }
    best.expect("feasible action set is never empty").0
}

fn round_half_toward_zero(t: f64) -> i64 {
    let whole = libm::trunc(t);
    let frac = t - whole;
    let r = if libm::fabs(frac) > 0.5 {
        whole + libm::copysign(1.0, t)
    } else {
        whole
    };
    r as i64
}

/// Maximiser of the learned Q estimate.
pub fn rl_action(
    bank: &BankConfig,
    chain: &BackgroundChain,
    s: &State,
    w: &WeightVector,
) -> Result<Action, DimensionMismatch> {
    let actions = feasible_actions(bank, chain, s);
    first_argmax(actions, |a| q_hat(&feature_vector(bank, chain, s, a), w))
}

/// Uniformly random feasible action with probability `eps`, otherwise
/// [`rl_action`]. Always consumes exactly one uniform draw, plus one index
/// draw when exploring.
pub fn epsilon_greedy_action<R: Rng + ?Sized>(
    bank: &BankConfig,
    chain: &BackgroundChain,
    s: &State,
    w: &WeightVector,
    eps: f64,
    rng: &mut R,
) -> Result<Action, DimensionMismatch> {
    assert!(
        (0.0..=1.0).contains(&eps),
        "exploration probability {eps} outside [0, 1]"
    );
    let u: f64 = rng.gen();
    if u < eps {
        let mut actions = feasible_actions(bank, chain, s);
        let i = rng.gen_range(0..actions.len());
        Ok(actions.swap_remove(i))
    } else {
        rl_action(bank, chain, s, w)
    }
}

/// A deterministic stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Greedy,
    Naive,
    /// Argmax of the linear Q estimate with frozen weights.
    Rl(WeightVector),
}

impl Policy {
    /// Learned policy, checking the weight dimension against the model.
    pub fn learned(
        bank: &BankConfig,
        chain: &BackgroundChain,
        w: WeightVector,
    ) -> Result<Self, DimensionMismatch> {
        let d = feature_dimension(bank.len(), chain.len());
        if w.dim() != d {
            return Err(DimensionMismatch {
                features: d,
                weights: w.dim(),
            });
        }
        Ok(Policy::Rl(w))
    }

    /// Stable identifier used on the command line and in reports.
    pub fn id(&self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::Naive => "naive",
            Policy::Rl(_) => "rl",
        }
    }

    /// Panics if an `Rl` policy carries weights of the wrong dimension; use
    /// [`Policy::learned`] to rule that out up front.
    pub fn act(&self, bank: &BankConfig, chain: &BackgroundChain, s: &State) -> Action {
        match self {
            Policy::Greedy => greedy_action(bank, chain, s),
            Policy::Naive => naive_action(bank, chain, s),
            Policy::Rl(w) => {
                rl_action(bank, chain, s, w).expect("weight dimension checked at construction")
            }
        }
    }
}

/// Identifier of a policy kind, without weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Greedy,
    Naive,
    Rl,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Greedy, PolicyKind::Naive, PolicyKind::Rl];

    pub fn id(self) -> &'static str {
        match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::Naive => "naive",
            PolicyKind::Rl => "rl",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(PolicyKind::Greedy),
            "naive" => Ok(PolicyKind::Naive),
            "rl" => Ok(PolicyKind::Rl),
            other => Err(alloc::format!(
                "unknown policy '{other}' (expected greedy, naive or rl)"
            )),
        }
    }
}
