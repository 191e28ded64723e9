//! Domain types, configuration validation and the shared projection helper.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};

/// One battery unit. Energy quantities are integer multiples of a base unit.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    /// Capacity in energy units.
    pub capacity: u32,
    /// Maximum units injected or drained per step.
    pub ramp: u32,
    /// Per-step retention factor applied to the post-action occupancy.
    pub dissipation: f64,
    /// Magnitude of the cycling-penalty prefactor; the reward applies the sign.
    pub penalty_weight: f64,
    /// Fraction of capacity below which a penalty accrues.
    pub lower_frac: f64,
    /// Fraction of capacity above which a penalty accrues.
    pub upper_frac: f64,
}

impl BatteryConfig {
    pub const DEFAULT_LOWER_FRAC: f64 = 0.2;
    pub const DEFAULT_UPPER_FRAC: f64 = 0.8;

    /// Lossless battery with the default 20% / 80% penalty thresholds.
    pub fn new(capacity: u32, ramp: u32, penalty_weight: f64) -> Self {
        Self {
            capacity,
            ramp,
            dissipation: 1.0,
            penalty_weight,
            lower_frac: Self::DEFAULT_LOWER_FRAC,
            upper_frac: Self::DEFAULT_UPPER_FRAC,
        }
    }

    pub fn with_dissipation(mut self, dissipation: f64) -> Self {
        self.dissipation = dissipation;
        self
    }

    pub fn with_thresholds(mut self, lower_frac: f64, upper_frac: f64) -> Self {
        self.lower_frac = lower_frac;
        self.upper_frac = upper_frac;
        self
    }
}

/// Starting occupancies for simulation and training.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialOccupancy {
    /// `floor(capacity / 2)` for every battery.
    Half,
    Explicit(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankConfig {
    pub batteries: Vec<BatteryConfig>,
    /// Discount factor, strictly inside (0, 1).
    pub gamma: f64,
    pub initial_occupancy: InitialOccupancy,
}

impl BankConfig {
    pub const DEFAULT_GAMMA: f64 = 0.95;

    pub fn new(batteries: Vec<BatteryConfig>) -> Self {
        Self {
            batteries,
            gamma: Self::DEFAULT_GAMMA,
            initial_occupancy: InitialOccupancy::Half,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_initial_occupancy(mut self, initial: InitialOccupancy) -> Self {
        self.initial_occupancy = initial;
        self
    }

    /// Same bank with the capacities replaced; every other field is kept.
    pub fn with_capacities(&self, capacities: &[u32]) -> Self {
        let mut out = self.clone();
        for (battery, &cap) in out.batteries.iter_mut().zip(capacities) {
            battery.capacity = cap;
        }
        out
    }

    /// Same bank with every ramp limit replaced.
    pub fn with_ramps(&self, ramps: &[u32]) -> Self {
        let mut out = self.clone();
        for (battery, &ramp) in out.batteries.iter_mut().zip(ramps) {
            battery.ramp = ramp;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.batteries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batteries.is_empty()
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.batteries.iter().map(|b| b.capacity).collect()
    }

    /// Resolved starting occupancy vector.
    pub fn initial_occupancy_vec(&self) -> Vec<i64> {
        match &self.initial_occupancy {
            InitialOccupancy::Half => self
                .batteries
                .iter()
                .map(|b| i64::from(b.capacity / 2))
                .collect(),
            InitialOccupancy::Explicit(v) => v.iter().map(|&x| i64::from(x)).collect(),
        }
    }

    /// True when the premises of greedy optimality hold: lossless batteries
    /// whose ramp limits never bind.
    pub fn ramps_never_bind_and_lossless(&self) -> bool {
        self.batteries
            .iter()
            .all(|b| b.dissipation == 1.0 && b.ramp >= b.capacity)
    }
}

/// Finite background Markov chain and its net-generation map.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundChain {
    pub labels: Vec<String>,
    /// Row-stochastic transition matrix, `transition[x][y] = P(x -> y)`.
    pub transition: Vec<Vec<f64>>,
    /// Net generation for each state.
    pub net_gen: Vec<i64>,
}

impl BackgroundChain {
    pub fn new(labels: Vec<String>, transition: Vec<Vec<f64>>, net_gen: Vec<i64>) -> Self {
        Self {
            labels,
            transition,
            net_gen,
        }
    }

    pub fn len(&self) -> usize {
        self.transition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transition.is_empty()
    }

    /// True if every state can reach every other state through positive
    /// transitions.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let forward = reachable_from_zero(n, |x, y| self.transition[x][y] > 0.0);
        let backward = reachable_from_zero(n, |x, y| self.transition[y][x] > 0.0);
        forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
    }
}

fn reachable_from_zero(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[0] = true;
    queue.push_back(0);
    while let Some(x) = queue.pop_front() {
        for (y, seen_y) in seen.iter_mut().enumerate() {
            if !*seen_y && edge(x, y) {
                *seen_y = true;
                queue.push_back(y);
            }
        }
    }
    seen
}

/// MDP state: background index plus integer battery occupancies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub x: usize,
    pub b: Vec<i64>,
}

impl State {
    pub fn new(x: usize, b: Vec<i64>) -> Self {
        Self { x, b }
    }
}

/// Units injected into (positive) or drained from (negative) each battery.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(pub Vec<i64>);

impl Action {
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Projection of `y` onto `[lo, hi]`.
///
/// Panics if `lo > hi`; every caller derives the interval from bounds that
/// satisfy `lo <= 0 <= hi`.
pub fn clip(y: i64, lo: i64, hi: i64) -> i64 {
    assert!(lo <= hi, "clip interval is empty: [{lo}, {hi}]");
    y.max(lo).min(hi)
}

/// One failed invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

const ROW_SUM_TOL: f64 = 1e-12;

/// Check every structural invariant of a bank/chain pair.
pub fn validate_config(bank: &BankConfig, chain: &BackgroundChain) -> ValidationReport {
    let mut report = ValidationReport::default();

    if bank.batteries.is_empty() {
        report.push("batteries", "at least one battery is required");
    }
    for (i, b) in bank.batteries.iter().enumerate() {
        let p = |field: &str| format!("batteries[{i}].{field}");
        if b.capacity < 1 {
            report.push(p("capacity"), "capacity >= 1");
        }
        if b.ramp < 1 {
            report.push(p("ramp"), "ramp >= 1");
        }
        if !(b.dissipation > 0.0 && b.dissipation <= 1.0) {
            report.push(
                p("dissipation"),
                format!("0 < dissipation <= 1 (got {})", b.dissipation),
            );
        }
        if !(b.penalty_weight >= 0.0 && b.penalty_weight.is_finite()) {
            report.push(
                p("penalty_weight"),
                format!("penalty_weight >= 0 (got {})", b.penalty_weight),
            );
        }
        if !(b.lower_frac >= 0.0 && b.lower_frac < 1.0) {
            report.push(
                p("lower_frac"),
                format!("0 <= lower_frac < 1 (got {})", b.lower_frac),
            );
        }
        if !(b.upper_frac > 0.0 && b.upper_frac <= 1.0) {
            report.push(
                p("upper_frac"),
                format!("0 < upper_frac <= 1 (got {})", b.upper_frac),
            );
        }
        // Written negated so that NaN fractions are reported too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(b.lower_frac < b.upper_frac) {
            report.push(p("lower_frac"), "lower_frac < upper_frac");
        }
    }

    if !(bank.gamma > 0.0 && bank.gamma < 1.0) {
        report.push("gamma", format!("0 < gamma < 1 (got {})", bank.gamma));
    }

    if let InitialOccupancy::Explicit(occ) = &bank.initial_occupancy {
        if occ.len() != bank.batteries.len() {
            report.push(
                "initial_occupancy",
                format!(
                    "expected {} entries, got {}",
                    bank.batteries.len(),
                    occ.len()
                ),
            );
        }
        for (i, (&o, b)) in occ.iter().zip(&bank.batteries).enumerate() {
            if o > b.capacity {
                report.push(
                    format!("initial_occupancy[{i}]"),
                    format!("0 <= occupancy <= capacity ({o} > {})", b.capacity),
                );
            }
        }
    }

    let n = chain.transition.len();
    if n == 0 {
        report.push(
            "chain.transition",
            "at least one background state is required",
        );
    }
    if chain.labels.len() != n {
        report.push(
            "chain.labels",
            format!("expected {n} labels, got {}", chain.labels.len()),
        );
    }
    if chain.net_gen.len() != n {
        report.push(
            "chain.net_gen",
            format!("expected {n} entries, got {}", chain.net_gen.len()),
        );
    }
    let mut square = true;
    for (x, row) in chain.transition.iter().enumerate() {
        if row.len() != n {
            square = false;
            report.push(
                format!("chain.transition[{x}]"),
                format!("expected {n} columns, got {}", row.len()),
            );
            continue;
        }
        if let Some(y) = row.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
            report.push(
                format!("chain.transition[{x}][{y}]"),
                "entries must be finite and >= 0",
            );
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            report.push(
                format!("chain.transition[{x}]"),
                format!("row must sum to 1 (sums to {sum})"),
            );
        }
    }
    if square && n > 0 && !chain.is_irreducible() {
        report.push("chain.transition", "chain is not irreducible");
    }

    report
}

/// Stable hex digest of the canonical encoding of a bank/chain pair.
///
/// Every field is hashed in declaration order, integers and floats as
/// little-endian bytes, strings length-prefixed.
pub fn config_fingerprint(bank: &BankConfig, chain: &BackgroundChain) -> String {
    let mut h = Sha256::new();
    h.update(b"battbank-config-v1");
    h.update((bank.batteries.len() as u64).to_le_bytes());
    for b in &bank.batteries {
        h.update(b.capacity.to_le_bytes());
        h.update(b.ramp.to_le_bytes());
        h.update(b.dissipation.to_le_bytes());
        h.update(b.penalty_weight.to_le_bytes());
        h.update(b.lower_frac.to_le_bytes());
        h.update(b.upper_frac.to_le_bytes());
    }
    h.update(bank.gamma.to_le_bytes());
    match &bank.initial_occupancy {
        InitialOccupancy::Half => h.update([0u8]),
        InitialOccupancy::Explicit(v) => {
            h.update([1u8]);
            h.update((v.len() as u64).to_le_bytes());
            for o in v {
                h.update(o.to_le_bytes());
            }
        }
    }
    h.update((chain.labels.len() as u64).to_le_bytes());
    for label in &chain.labels {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
    }
    h.update((chain.transition.len() as u64).to_le_bytes());
    for row in &chain.transition {
        h.update((row.len() as u64).to_le_bytes());
        for p in row {
            h.update(p.to_le_bytes());
        }
    }
    for f in &chain.net_gen {
        h.update(f.to_le_bytes());
    }
    let digest = h.finalize();
    let mut out = String::with_capacity(32);
    for byte in &digest[..16] {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use proptest::prelude::*;

    #[test]
    fn clip_examples() {
        assert_eq!(clip(5, -3, 3), 3);
        assert_eq!(clip(-7, -3, 3), -3);
        assert_eq!(clip(1, -3, 3), 1);
    }

    #[test]
    #[should_panic]
    fn clip_rejects_empty_interval() {
        clip(0, 3, -3);
    }

    proptest! {
        #[test]
        fn clip_is_idempotent_and_in_range(y in -1000i64..1000, lo in -100i64..0, hi in 0i64..100) {
            let c = clip(y, lo, hi);
            prop_assert!(lo <= c && c <= hi);
            prop_assert_eq!(clip(c, lo, hi), c);
        }
    }

    #[test]
    fn reference_config_passes() {
        let bank = reference::bank(&[2, 3], 25);
        let report = validate_config(&bank, &reference::chain());
        assert!(report.is_pass(), "{report}");
    }

    #[test]
    fn short_row_is_named() {
        let mut chain = reference::chain();
        chain.transition[2] = vec![0.3, 0.2, 0.0, 0.4];
        let report = validate_config(&reference::bank(&[2, 3], 25), &chain);
        assert!(!report.is_pass());
        assert!(report
            .violations
            .iter()
            .any(|v| v.path == "chain.transition[2]"));
    }

    #[test]
    fn inverted_thresholds_fail() {
        let mut bank = reference::bank(&[10, 10], 25);
        bank.batteries[0] = bank.batteries[0].clone().with_thresholds(0.8, 0.2);
        let report = validate_config(&bank, &reference::chain());
        assert!(
            report
                .violations
                .iter()
                .any(|v| v.path == "batteries[0].lower_frac"
                    && v.message == "lower_frac < upper_frac")
        );
    }

    #[test]
    fn reducible_chain_fails() {
        let chain = BackgroundChain::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![1, -1],
        );
        let report = validate_config(&reference::bank(&[2, 3], 25), &chain);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("irreducible")));
    }

    #[test]
    fn occupancy_above_capacity_fails() {
        let bank = reference::bank(&[2, 3], 25)
            .with_initial_occupancy(InitialOccupancy::Explicit(vec![3, 0]));
        let report = validate_config(&bank, &reference::chain());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].path, "initial_occupancy[0]");
    }

    #[test]
    fn gamma_bounds() {
        for g in [0.0, 1.0, -0.5, f64::NAN] {
            let bank = reference::bank(&[2, 3], 25).with_gamma(g);
            assert!(!validate_config(&bank, &reference::chain()).is_pass());
        }
    }

    #[test]
    fn validation_is_pure() {
        let mut bank = reference::bank(&[2, 3], 25);
        bank.batteries[1].dissipation = 0.0;
        let chain = reference::chain();
        assert_eq!(
            validate_config(&bank, &chain),
            validate_config(&bank, &chain)
        );
    }

    #[test]
    fn half_occupancy_floors() {
        let bank = reference::bank(&[3, 5], 2);
        assert_eq!(bank.initial_occupancy_vec(), vec![1, 2]);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let chain = reference::chain();
        let a = config_fingerprint(&reference::bank(&[2, 3], 25), &chain);
        let b = config_fingerprint(&reference::bank(&[2, 3], 25), &chain);
        let c = config_fingerprint(&reference::bank(&[2, 4], 25), &chain);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 32);
    }
}
