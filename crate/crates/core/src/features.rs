//! Kernel feature map and the linear Q estimate.
//!
//! For `N` batteries and `K` background states the feature vector has
//! `d = (2N + 1) K + 1` entries: the instantaneous reward, followed by one
//! block of `2N + 1` entries per background state. Only the block of the
//! current background state is populated, with a constant `1` and, for each
//! battery, the pair `(-(1 - y)^4, -y^4)` of its post-action normalised
//! occupancy `y`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::config::{Action, BackgroundChain, BankConfig, State};
use crate::env::reward;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dimension mismatch: features have {features} entries, weights {weights}")]
pub struct DimensionMismatch {
    pub features: usize,
    pub weights: usize,
}

pub fn feature_dimension(num_batteries: usize, num_bg_states: usize) -> usize {
    (2 * num_batteries + 1) * num_bg_states + 1
}

/// Dense feature vector that remembers which block is populated, so dot
/// products only touch entry 0 and that block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    active: Range<usize>,
}

impl FeatureVector {
    /// Arbitrary dense vector; every entry past 0 is treated as active.
    pub fn from_dense(values: Vec<f64>) -> Self {
        let active = 1.min(values.len())..values.len();
        Self { values, active }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Index range of the populated background-state block.
    pub fn active_block(&self) -> Range<usize> {
        self.active.clone()
    }

    /// `(index, value)` for entry 0 and the active block.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        core::iter::once(0)
            .filter(|_| !self.values.is_empty())
            .chain(self.active.clone())
            .map(move |i| (i, self.values[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn for_model(bank: &BankConfig, chain: &BackgroundChain) -> Self {
        Self::zeros(feature_dimension(bank.len(), chain.len()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }
}

/// Post-action fill fraction of each battery.
pub fn normalized_occupancy(bank: &BankConfig, b: &[i64], a: &Action) -> Vec<f64> {
    bank.batteries
        .iter()
        .zip(b)
        .zip(&a.0)
        .map(|((battery, &occ), &inj)| (occ + inj) as f64 / f64::from(battery.capacity))
        .collect()
}

/// `(-(1 - y)^4, -y^4)`: penalty-to-go shapes for running empty and full.
pub fn kernel_pair(y: f64) -> (f64, f64) {
    let e = 1.0 - y;
    let e2 = e * e;
    let y2 = y * y;
    (-(e2 * e2), -(y2 * y2))
}

pub fn feature_vector(
    bank: &BankConfig,
    chain: &BackgroundChain,
    s: &State,
    a: &Action,
) -> FeatureVector {
    let n = bank.len();
    let block_len = 2 * n + 1;
    let mut values = vec![0.0; feature_dimension(n, chain.len())];
    values[0] = reward(bank, s, a);
    let start = 1 + s.x * block_len;
    values[start] = 1.0;
    for (i, y) in normalized_occupancy(bank, &s.b, a).into_iter().enumerate() {
        let (empty, full) = kernel_pair(y);
        values[start + 1 + 2 * i] = empty;
        values[start + 2 + 2 * i] = full;
    }
    FeatureVector {
        values,
        active: start..start + block_len,
    }
}

/// `phi . w`, summing only over the support of `phi`.
pub fn q_hat(phi: &FeatureVector, w: &WeightVector) -> Result<f64, DimensionMismatch> {
    if phi.dim() != w.dim() {
        return Err(DimensionMismatch {
            features: phi.dim(),
            weights: w.dim(),
        });
    }
    Ok(phi.support().map(|(i, v)| v * w.0[i]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn occupancy_examples() {
        let bank = reference::bank(&[10, 10], 25);
        assert_eq!(
            normalized_occupancy(&bank, &[5, 0], &Action(vec![0, 0])),
            vec![0.5, 0.0]
        );
        assert_eq!(
            normalized_occupancy(&bank, &[8, 0], &Action(vec![2, 0]))[0],
            1.0
        );
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_pair(0.0), (-1.0, 0.0));
        assert_eq!(kernel_pair(1.0), (0.0, -1.0));
        assert_eq!(kernel_pair(0.5), (-0.0625, -0.0625));
    }

    #[test]
    fn reference_dimension() {
        assert_eq!(feature_dimension(2, 4), 21);
    }

    #[test]
    fn empty_bank_block() {
        let bank = reference::bank(&[2, 3], 25);
        let chain = reference::chain();
        let s = State::new(0, vec![0, 0]);
        let a = Action(vec![0, 0]);
        let phi = feature_vector(&bank, &chain, &s, &a);
        let v = phi.values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], reward(&bank, &s, &a));
        assert_eq!(&v[1..6], &[1.0, -1.0, 0.0, -1.0, 0.0]);
        assert!(v[6..].iter().all(|&e| e == 0.0));
        assert_eq!(phi.active_block(), 1..6);
    }

    #[test]
    fn blocks_disjoint_across_background_states() {
        let bank = reference::bank(&[10, 10], 25);
        let chain = reference::chain();
        let a = Action(vec![0, 0]);
        let p = feature_vector(&bank, &chain, &State::new(1, vec![5, 5]), &a);
        let q = feature_vector(&bank, &chain, &State::new(3, vec![5, 5]), &a);
        for i in 1..p.dim() {
            assert!(p.values()[i] == 0.0 || q.values()[i] == 0.0);
        }
    }

    #[test]
    fn q_hat_examples() {
        let bank = reference::bank(&[2, 3], 25);
        let chain = reference::chain();
        let s = State::new(0, vec![0, 0]);
        let a = Action(vec![0, 0]);
        let phi = feature_vector(&bank, &chain, &s, &a);
        assert_eq!(q_hat(&phi, &WeightVector::zeros(21)).unwrap(), 0.0);
        let mut unit = WeightVector::zeros(21);
        unit.0[0] = 1.0;
        assert_eq!(q_hat(&phi, &unit).unwrap(), reward(&bank, &s, &a));

        let dense = FeatureVector::from_dense(vec![1.0, 2.0, 0.0]);
        assert_eq!(
            q_hat(&dense, &WeightVector(vec![0.5, 1.0, 7.0])).unwrap(),
            2.5
        );
        assert_eq!(
            q_hat(&dense, &WeightVector::zeros(4)),
            Err(DimensionMismatch {
                features: 3,
                weights: 4
            })
        );
    }
}
