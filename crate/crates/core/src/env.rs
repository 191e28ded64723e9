//! MDP mechanics: feasible actions, battery evolution and the cycling penalty.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::net_generation;
use crate::config::{clip, Action, BackgroundChain, BankConfig, State};

/// Aggregate limits on the bank's total injection in one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionBounds {
    /// Negated maximum total drain; always `<= 0`.
    pub min_total: i64,
    /// Maximum total injection; always `>= 0`.
    pub max_total: i64,
    /// Net generation projected onto `[min_total, max_total]`.
    pub target: i64,
}

pub fn action_bounds(bank: &BankConfig, chain: &BackgroundChain, s: &State) -> ActionBounds {
    bounds_for(bank, &s.b, net_generation(chain, s.x))
}

pub(crate) fn bounds_for(bank: &BankConfig, b: &[i64], net_gen: i64) -> ActionBounds {
    let mut min_total = 0;
    let mut max_total = 0;
    for (battery, &occ) in bank.batteries.iter().zip(b) {
        let cap = i64::from(battery.capacity);
        let ramp = i64::from(battery.ramp);
        min_total -= occ.min(ramp);
        max_total += (cap - occ).min(ramp);
    }
    ActionBounds {
        min_total,
        max_total,
        target: clip(net_gen, min_total, max_total),
    }
}

/// Every action meeting the ramp, capacity and total-injection constraints,
/// in lexicographic order. Never empty for a valid state.
pub fn feasible_actions(bank: &BankConfig, chain: &BackgroundChain, s: &State) -> Vec<Action> {
    let bounds = action_bounds(bank, chain, s);
    feasible_actions_with_total(bank, &s.b, bounds.target)
}

/// Integer vectors with per-component ramp/capacity limits summing to `total`.
pub(crate) fn feasible_actions_with_total(bank: &BankConfig, b: &[i64], total: i64) -> Vec<Action> {
    let n = bank.len();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for (battery, &occ) in bank.batteries.iter().zip(b) {
        let cap = i64::from(battery.capacity);
        let ramp = i64::from(battery.ramp);
        lo.push((-ramp).max(-occ));
        hi.push(ramp.min(cap - occ));
    }
    // suffix_lo[i] = sum of lo[i..], likewise for hi.
    let mut suffix_lo = vec![0; n + 1];
    let mut suffix_hi = vec![0; n + 1];
    for i in (0..n).rev() {
        suffix_lo[i] = suffix_lo[i + 1] + lo[i];
        suffix_hi[i] = suffix_hi[i + 1] + hi[i];
    }

    let mut out = Vec::new();
    let mut prefix = vec![0; n];
    compose(
        0,
        total,
        &lo,
        &hi,
        &suffix_lo,
        &suffix_hi,
        &mut prefix,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn compose(
    i: usize,
    remaining: i64,
    lo: &[i64],
    hi: &[i64],
    suffix_lo: &[i64],
    suffix_hi: &[i64],
    prefix: &mut Vec<i64>,
    out: &mut Vec<Action>,
) {
    if i == lo.len() {
        if remaining == 0 {
            out.push(Action(prefix.clone()));
        }
        return;
    }
    let first = lo[i].max(remaining - suffix_hi[i + 1]);
    let last = hi[i].min(remaining - suffix_lo[i + 1]);
    for v in first..=last {
        prefix[i] = v;
        compose(
            i + 1,
            remaining - v,
            lo,
            hi,
            suffix_lo,
            suffix_hi,
            prefix,
            out,
        );
    }
}

/// Cycling penalty of the post-action occupancies; always `<= 0`.
pub fn reward(bank: &BankConfig, s: &State, a: &Action) -> f64 {
    reward_for(bank, &s.b, a)
}

pub(crate) fn reward_for(bank: &BankConfig, b: &[i64], a: &Action) -> f64 {
    let mut penalty = 0.0;
    for ((battery, &occ), &inj) in bank.batteries.iter().zip(b).zip(&a.0) {
        let level = occ + inj;
        let cap = i64::from(battery.capacity);
        assert!(
            (0..=cap).contains(&level),
            "action leaves battery outside [0, {cap}]: {level}"
        );
        let level = level as f64;
        let cap = cap as f64;
        let below = (battery.lower_frac * cap - level).max(0.0);
        let above = (level - battery.upper_frac * cap).max(0.0);
        penalty += battery.penalty_weight * (below + above);
    }
    -penalty
}

/// Post-dissipation occupancies: `floor(eta * (b + a))` per battery.
pub fn apply_action(bank: &BankConfig, b: &[i64], a: &Action) -> Vec<i64> {
    bank.batteries
        .iter()
        .zip(b)
        .zip(&a.0)
        .map(|((battery, &occ), &inj)| {
            let level = occ + inj;
            let cap = i64::from(battery.capacity);
            assert!(
                (0..=cap).contains(&level),
                "action leaves battery outside [0, {cap}]: {level}"
            );
            if battery.dissipation == 1.0 {
                level
            } else {
                libm::floor(battery.dissipation * level as f64) as i64
            }
        })
        .collect()
}

/// Apply `a` in `s`, moving the background to `next_x`. Returns the next state
/// and the reward earned by `a`.
pub fn step(bank: &BankConfig, s: &State, a: &Action, next_x: usize) -> (State, f64) {
    let r = reward(bank, s, a);
    (State::new(next_x, apply_action(bank, &s.b, a)), r)
}
