//! Sampling the background chain.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::config::BackgroundChain;
use crate::SimRng;

/// A seeded sample path of the background chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub seed: u64,
    /// `steps + 1` background indices, starting at the initial state.
    pub x_path: Vec<usize>,
}

impl Trajectory {
    /// Number of transitions in the path.
    pub fn steps(&self) -> usize {
        self.x_path.len().saturating_sub(1)
    }
}

/// Draw the successor of `x`.
pub fn sample_next<R: Rng + ?Sized>(chain: &BackgroundChain, x: usize, rng: &mut R) -> usize {
    let row = &chain.transition[x];
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (y, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = y;
            if u < acc {
                return y;
            }
        }
    }
    // Rounding left `acc` a hair under 1.
    last_positive
}

pub fn generate_trajectory(
    chain: &BackgroundChain,
    x0: usize,
    steps: usize,
    seed: u64,
) -> Trajectory {
    assert!(
        x0 < chain.len(),
        "initial background state {x0} out of range"
    );
    let mut rng = SimRng::seed_from_u64(seed);
    let mut x_path = vec![x0];
    x_path.reserve(steps);
    let mut x = x0;
    for _ in 0..steps {
        x = sample_next(chain, x, &mut rng);
        x_path.push(x);
    }
    Trajectory { seed, x_path }
}

pub fn net_generation(chain: &BackgroundChain, x: usize) -> i64 {
    chain.net_gen[x]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use alloc::string::ToString;

    fn alternating() -> BackgroundChain {
        BackgroundChain::new(
            vec!["a".to_string(), "b".to_string()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1, -1],
        )
    }

    #[test]
    fn deterministic_row_always_taken() {
        let chain = alternating();
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_next(&chain, 0, &mut rng), 1);
        }
    }

    #[test]
    fn same_seed_same_successor() {
        let chain = reference::chain();
        let a = sample_next(&chain, 1, &mut SimRng::seed_from_u64(42));
        let b = sample_next(&chain, 1, &mut SimRng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn row_zero_frequencies() {
        let chain = reference::chain();
        let mut rng = SimRng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_next(&chain, 0, &mut rng)] += 1;
        }
        let expected = [0.0, 0.5, 0.3, 0.2];
        for (c, p) in counts.iter().zip(expected) {
            assert!((*c as f64 / draws as f64 - p).abs() < 0.01, "{counts:?}");
        }
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn trajectory_edge_cases() {
        let chain = alternating();
        assert_eq!(generate_trajectory(&chain, 0, 0, 9).x_path, vec![0]);
        assert_eq!(
            generate_trajectory(&chain, 0, 4, 9).x_path,
            vec![0, 1, 0, 1, 0]
        );
    }

    #[test]
    fn trajectory_reproducible_and_valid() {
        let chain = reference::chain();
        let a = generate_trajectory(&chain, 0, 5_000, 77);
        let b = generate_trajectory(&chain, 0, 5_000, 77);
        assert_eq!(a, b);
        assert_eq!(a.steps(), 5_000);
        for w in a.x_path.windows(2) {
            assert!(chain.transition[w[0]][w[1]] > 0.0);
        }
        assert_ne!(a, generate_trajectory(&chain, 0, 5_000, 78));
    }

    #[test]
    fn net_generation_is_label() {
        let chain = reference::chain();
        assert_eq!(net_generation(&chain, 0), -4);
        assert_eq!(net_generation(&chain, 3), 5);
        assert_eq!(net_generation(&chain, 2), 1);
    }
}
