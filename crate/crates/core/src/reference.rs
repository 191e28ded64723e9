//! The toy instance from the case study: a four-state background chain with
//! net generation `{-4, -1, 1, 5}` and a two-battery bank whose penalty
//! weights differ by a factor of ten.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{BackgroundChain, BankConfig, BatteryConfig};

/// Net generation of each background state; the labels are the same values.
pub const NET_GENERATION: [i64; 4] = [-4, -1, 1, 5];

pub const TRANSITION: [[f64; 4]; 4] = [
    [0.0, 0.5, 0.3, 0.2],
    [0.5, 0.0, 0.1, 0.4],
    [0.3, 0.2, 0.0, 0.5],
    [0.3, 0.3, 0.4, 0.0],
];

/// Penalty magnitudes of the two batteries.
pub const PENALTY_WEIGHTS: [f64; 2] = [0.1, 1.0];

/// Ramp limit that never binds for any capacity in the unconstrained table.
pub const UNCONSTRAINED_RAMP: u32 = 25;

/// Ramp limit of the constrained table.
pub const CONSTRAINED_RAMP: u32 = 2;

pub fn chain() -> BackgroundChain {
    BackgroundChain::new(
        NET_GENERATION.iter().map(|f| f.to_string()).collect(),
        TRANSITION.iter().map(|row| row.to_vec()).collect(),
        NET_GENERATION.to_vec(),
    )
}

/// Two lossless batteries with the given capacities and a common ramp limit.
///
/// Panics unless exactly two capacities are supplied.
pub fn bank(capacities: &[u32], ramp: u32) -> BankConfig {
    assert_eq!(capacities.len(), 2, "the reference bank has two batteries");
    let batteries: Vec<BatteryConfig> = capacities
        .iter()
        .zip(PENALTY_WEIGHTS)
        .map(|(&cap, w)| BatteryConfig::new(cap, ramp, w))
        .collect();
    BankConfig::new(batteries)
}

/// Capacity pairs of the unconstrained comparison table.
pub fn unconstrained_sizes() -> Vec<[u32; 2]> {
    vec![
        [2, 3],
        [3, 5],
        [6, 10],
        [10, 10],
        [15, 10],
        [15, 15],
        [20, 20],
    ]
}

/// Capacity pairs of the ramp-constrained comparison table.
pub fn constrained_sizes() -> Vec<[u32; 2]> {
    vec![
        [2, 3],
        [3, 5],
        [6, 10],
        [10, 10],
        [15, 10],
        [15, 15],
        [20, 20],
        [25, 25],
        [30, 30],
        [40, 40],
        [50, 50],
    ]
}
