//! Versioned JSON container for learned weights.
//!
//! The file records the fingerprint of the configuration it was trained on;
//! loading against a different configuration is refused, so weights cannot
//! silently be reused on a bank they were not learned for.

use std::fs;
use std::path::Path;

use battbank_core::{
    config_fingerprint, feature_dimension, BackgroundChain, BankConfig, WeightVector,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub version: u32,
    pub fingerprint: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub num_batteries: usize,
    pub num_bg_states: usize,
    pub weights: Vec<f64>,
}

impl WeightsFile {
    pub fn new(bank: &BankConfig, chain: &BackgroundChain, w: &WeightVector) -> Self {
        WeightsFile {
            version: WEIGHTS_FORMAT_VERSION,
            fingerprint: config_fingerprint(bank, chain),
            d: w.dim(),
            num_batteries: bank.len(),
            num_bg_states: chain.len(),
            weights: w.0.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("weights serialise");
        text.push('\n');
        text
    }

    /// Check the header against `bank` and `chain` and return the weights.
    pub fn into_weights(
        self,
        bank: &BankConfig,
        chain: &BackgroundChain,
    ) -> Result<WeightVector, String> {
        if self.version != WEIGHTS_FORMAT_VERSION {
            return Err(format!(
                "unsupported weights format version {} (expected {WEIGHTS_FORMAT_VERSION})",
                self.version
            ));
        }
        let expected = config_fingerprint(bank, chain);
        if self.fingerprint != expected {
            return Err(format!(
                "weights were trained on configuration {}, not {expected}",
                self.fingerprint
            ));
        }
        let d = feature_dimension(bank.len(), chain.len());
        if self.num_batteries != bank.len()
            || self.num_bg_states != chain.len()
            || self.d != d
            || self.weights.len() != d
        {
            return Err(format!(
                "weights header (d={}, N={}, states={}, len={}) does not match the model (d={d}, N={}, states={})",
                self.d,
                self.num_batteries,
                self.num_bg_states,
                self.weights.len(),
                bank.len(),
                chain.len()
            ));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err("weights contain non-finite entries".to_string());
        }
        Ok(WeightVector(self.weights))
    }
}

pub fn save_weights(
    path: &Path,
    bank: &BankConfig,
    chain: &BackgroundChain,
    w: &WeightVector,
) -> Result<(), CliError> {
    fs::write(path, WeightsFile::new(bank, chain, w).to_json()).map_err(|e| CliError::io(path, e))
}

pub fn load_weights(
    path: &Path,
    bank: &BankConfig,
    chain: &BackgroundChain,
) -> Result<WeightVector, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: WeightsFile = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
    file.into_weights(bank, chain)
        .map_err(|message| CliError::Validation(format!("{}: {message}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use battbank_core::reference;

    #[test]
    fn header_fields() {
        let bank = reference::bank(&[2, 3], 25);
        let chain = reference::chain();
        let file = WeightsFile::new(&bank, &chain, &WeightVector::zeros(21));
        let json: serde_json::Value = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(json["version"], 1);
        assert_eq!(json["d"], 21);
        assert_eq!(json["N"], 2);
        assert_eq!(json["num_bg_states"], 4);
        assert_eq!(json["fingerprint"].as_str().unwrap().len(), 32);
    }

    #[test]
    fn rejects_other_configuration() {
        let chain = reference::chain();
        let file = WeightsFile::new(
            &reference::bank(&[2, 3], 25),
            &chain,
            &WeightVector::zeros(21),
        );
        let err = file
            .into_weights(&reference::bank(&[3, 5], 25), &chain)
            .unwrap_err();
        assert!(err.contains("trained on configuration"));
    }

    #[test]
    fn rejects_wrong_length() {
        let bank = reference::bank(&[2, 3], 25);
        let chain = reference::chain();
        let mut file = WeightsFile::new(&bank, &chain, &WeightVector::zeros(21));
        file.weights.pop();
        assert!(file.into_weights(&bank, &chain).is_err());
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        let bank = reference::bank(&[2, 3], 25);
        let chain = reference::chain();
        let w = WeightVector((0..21).map(|i| (i as f64).sqrt() * -1.0e-3 / 7.0).collect());
        let text = WeightsFile::new(&bank, &chain, &w).to_json();
        let back: WeightsFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_weights(&bank, &chain).unwrap(), w);
    }
}
