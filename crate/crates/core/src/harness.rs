//! Coupled-trajectory evaluation and multi-seed policy comparison.
//!
//! Every policy in a report consumes the same stored background path, so
//! differences in totals come from the control decisions alone.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::chain::{generate_trajectory, Trajectory};
use crate::config::{config_fingerprint, validate_config, BackgroundChain, BankConfig, State};
use crate::env::step;
use crate::features::WeightVector;
use crate::learner::{train, LearnError, LearnSchedule};
use crate::policies::Policy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training failed: {0}")]
    Training(#[from] LearnError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTotals {
    pub policy: String,
    /// Undiscounted reward summed over the horizon.
    pub total: f64,
    pub mean_per_step: f64,
    /// Steps with strictly negative reward.
    pub penalty_events: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub trajectory_seed: u64,
    pub steps: usize,
    pub fingerprint: String,
    pub totals: Vec<PolicyTotals>,
}

impl EvalReport {
    pub fn total_for(&self, policy: &str) -> Option<f64> {
        self.totals
            .iter()
            .find(|t| t.policy == policy)
            .map(|t| t.total)
    }
}

/// Run each policy from `(traj.x_path[0], b0)` along the stored path.
pub fn coupled_rollout(
    bank: &BankConfig,
    chain: &BackgroundChain,
    policies: &[Policy],
    traj: &Trajectory,
    b0: &[i64],
) -> EvalReport {
    let steps = traj.steps();
    let totals = policies
        .iter()
        .map(|policy| {
            let mut s = State::new(traj.x_path[0], b0.to_vec());
            let mut total = 0.0;
            let mut penalty_events = 0;
            for &next_x in &traj.x_path[1..] {
                let a = policy.act(bank, chain, &s);
                let (next, r) = step(bank, &s, &a, next_x);
                total += r;
                if r < 0.0 {
                    penalty_events += 1;
                }
                s = next;
            }
            let mean_per_step = if steps == 0 {
                0.0
            } else {
                total / steps as f64
            };
            PolicyTotals {
                policy: String::from(policy.id()),
                total,
                mean_per_step,
                penalty_events,
            }
        })
        .collect();
    EvalReport {
        trajectory_seed: traj.seed,
        steps,
        fingerprint: config_fingerprint(bank, chain),
        totals,
    }
}

/// A grid of battery sizes crossed with evaluation seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSpec {
    /// Bank whose capacities are replaced by each entry of `sizes`.
    pub template: BankConfig,
    pub chain: BackgroundChain,
    pub sizes: Vec<Vec<u32>>,
    pub seeds: Vec<u64>,
    /// Evaluation horizon.
    pub steps: usize,
    /// Training schedule; `schedule.seed` is mixed with each evaluation seed.
    pub schedule: LearnSchedule,
    pub x0: usize,
}

impl ComparisonSpec {
    pub fn bank_for(&self, size: &[u32]) -> BankConfig {
        self.template.with_capacities(size)
    }

    /// Seed of the training run paired with evaluation seed `seed`.
    pub fn training_seed(&self, seed: u64) -> u64 {
        splitmix64(self.schedule.seed ^ splitmix64(seed))
    }

    /// Every `(size index, seed)` job of the grid, sizes outermost.
    pub fn jobs(&self) -> Vec<(usize, u64)> {
        (0..self.sizes.len())
            .flat_map(|i| self.seeds.iter().map(move |&seed| (i, seed)))
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of one `(size, seed)` job.
#[derive(Debug, Clone, PartialEq)]
pub struct RowOutcome {
    pub size_index: usize,
    pub seed: u64,
    pub report: Result<EvalReport, HarnessError>,
}

/// Train on a fresh stream, then evaluate greedy, naive and the learned
/// policy on the trajectory drawn from `seed`.
pub fn run_job(spec: &ComparisonSpec, size_index: usize, seed: u64) -> RowOutcome {
    run_job_with_weights(spec, size_index, seed, None)
}

/// As [`run_job`], but evaluate `weights` instead of training when given.
pub fn run_job_with_weights(
    spec: &ComparisonSpec,
    size_index: usize,
    seed: u64,
    weights: Option<&WeightVector>,
) -> RowOutcome {
    let report = (|| {
        let bank = spec.bank_for(&spec.sizes[size_index]);
        let validation = validate_config(&bank, &spec.chain);
        if !validation.is_pass() {
            return Err(HarnessError::InvalidConfig(format!("{validation}")));
        }
        let b0 = bank.initial_occupancy_vec();
        let w = match weights {
            Some(w) => w.clone(),
            None => {
                let schedule = spec.schedule.clone().with_seed(spec.training_seed(seed));
                train(&bank, &spec.chain, &schedule, spec.x0, &b0)?.0
            }
        };
        let learned = Policy::learned(&bank, &spec.chain, w).map_err(LearnError::from)?;
        let traj = generate_trajectory(&spec.chain, spec.x0, spec.steps, seed);
        Ok(coupled_rollout(
            &bank,
            &spec.chain,
            &[Policy::Greedy, Policy::Naive, learned],
            &traj,
            &b0,
        ))
    })();
    RowOutcome {
        size_index,
        seed,
        report,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub size: Vec<u32>,
    pub policy: String,
    pub mean: f64,
    /// Sample standard deviation across seeds; 0 for a single seed.
    pub stddev: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowFailure {
    pub size: Vec<u32>,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
    pub failures: Vec<RowFailure>,
}

impl ComparisonTable {
    /// Merge job outcomes (in any order) into per-size, per-policy rows.
    /// Statistics cover the seeds that succeeded for that size.
    pub fn assemble(spec: &ComparisonSpec, mut outcomes: Vec<RowOutcome>) -> Self {
        let seed_pos = |seed: u64| {
            spec.seeds
                .iter()
                .position(|&s| s == seed)
                .unwrap_or(usize::MAX)
        };
        outcomes.sort_by_key(|o| (o.size_index, seed_pos(o.seed)));

        let mut table = ComparisonTable {
            seeds: spec.seeds.clone(),
            ..Default::default()
        };
        for (i, size) in spec.sizes.iter().enumerate() {
            let mut reports = Vec::new();
            for o in outcomes.iter().filter(|o| o.size_index == i) {
                match &o.report {
                    Ok(r) => reports.push(r),
                    Err(e) => table.failures.push(RowFailure {
                        size: size.clone(),
                        seed: o.seed,
                        message: format!("{e}"),
                    }),
                }
            }
            let Some(first) = reports.first() else {
                continue;
            };
            for t in &first.totals {
                let per_seed: Vec<f64> = reports
                    .iter()
                    .filter_map(|r| r.total_for(&t.policy))
                    .collect();
                let (mean, stddev) = mean_and_stddev(&per_seed);
                table.rows.push(ComparisonRow {
                    size: size.clone(),
                    policy: t.policy.clone(),
                    mean,
                    stddev,
                    per_seed,
                });
            }
        }
        table
    }

    pub fn row(&self, size: &[u32], policy: &str) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.size == size && r.policy == policy)
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

pub(crate) fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var))
}

/// Run every job of the grid in order and assemble the table.
pub fn compare_policies(spec: &ComparisonSpec) -> ComparisonTable {
    let outcomes = spec
        .jobs()
        .into_iter()
        .map(|(i, seed)| run_job(spec, i, seed))
        .collect();
    ComparisonTable::assemble(spec, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use alloc::vec;

    fn small_spec(
        ramp: u32,
        sizes: Vec<Vec<u32>>,
        seeds: Vec<u64>,
        steps: usize,
    ) -> ComparisonSpec {
        ComparisonSpec {
            template: reference::bank(&[2, 3], ramp),
            chain: reference::chain(),
            sizes,
            seeds,
            steps,
            schedule: LearnSchedule::default().with_steps(2_000),
            x0: 0,
        }
    }

    #[test]
    fn zero_horizon_totals_are_zero() {
        let bank = reference::bank(&[3, 5], 2);
        let chain = reference::chain();
        let traj = generate_trajectory(&chain, 0, 0, 1);
        let report = coupled_rollout(
            &bank,
            &chain,
            &[Policy::Greedy, Policy::Naive],
            &traj,
            &[1, 2],
        );
        assert!(report
            .totals
            .iter()
            .all(|t| t.total == 0.0 && t.penalty_events == 0));
    }

    #[test]
    fn zero_penalty_totals_are_zero() {
        let mut bank = reference::bank(&[3, 5], 2);
        for b in &mut bank.batteries {
            b.penalty_weight = 0.0;
        }
        let chain = reference::chain();
        let traj = generate_trajectory(&chain, 0, 2_000, 1);
        let report = coupled_rollout(
            &bank,
            &chain,
            &[Policy::Greedy, Policy::Naive],
            &traj,
            &[1, 2],
        );
        assert!(report.totals.iter().all(|t| t.total == 0.0));
    }

    #[test]
    fn greedy_beats_naive_per_path_when_unconstrained() {
        let bank = reference::bank(&[6, 10], 25);
        let chain = reference::chain();
        for seed in 0..3 {
            let traj = generate_trajectory(&chain, 0, 5_000, seed);
            let r = coupled_rollout(
                &bank,
                &chain,
                &[Policy::Greedy, Policy::Naive],
                &traj,
                &[3, 5],
            );
            assert!(r.total_for("greedy").unwrap() >= r.total_for("naive").unwrap());
        }
    }

    #[test]
    fn comparison_is_deterministic() {
        let spec = small_spec(2, vec![vec![3, 5]], vec![1, 2], 1_000);
        let a = compare_policies(&spec);
        let b = compare_policies(&spec);
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 3);
        assert_eq!(a.row(&[3, 5], "rl").unwrap().per_seed.len(), 2);
    }

    #[test]
    fn assembly_ignores_job_order() {
        let spec = small_spec(2, vec![vec![2, 3], vec![3, 5]], vec![4, 5], 500);
        let mut outcomes: Vec<_> = spec
            .jobs()
            .into_iter()
            .map(|(i, s)| run_job(&spec, i, s))
            .collect();
        let forward = ComparisonTable::assemble(&spec, outcomes.clone());
        outcomes.reverse();
        assert_eq!(forward, ComparisonTable::assemble(&spec, outcomes));
    }

    #[test]
    fn zero_penalty_table_is_zero() {
        let mut spec = small_spec(25, vec![vec![6, 10]], vec![1, 2, 3], 1_000);
        for b in &mut spec.template.batteries {
            b.penalty_weight = 0.0;
        }
        let table = compare_policies(&spec);
        assert!(table.rows.iter().all(|r| r.mean == 0.0 && r.stddev == 0.0));
    }

    #[test]
    fn invalid_row_is_reported_and_others_continue() {
        let spec = small_spec(2, vec![vec![0, 3], vec![3, 5]], vec![1], 200);
        let table = compare_policies(&spec);
        assert_eq!(table.failures.len(), 1);
        assert_eq!(table.failures[0].size, vec![0, 3]);
        assert!(table.row(&[3, 5], "greedy").is_some());
    }

    #[test]
    fn sample_stddev() {
        let (m, s) = mean_and_stddev(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(mean_and_stddev(&[7.0]), (7.0, 0.0));
    }
}
