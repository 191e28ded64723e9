//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "batteries": [{"capacity": 2, "ramp": 25, "dissipation": 1.0,
//!                  "penalty_weight": 0.1, "lower_frac": 0.2, "upper_frac": 0.8}],
//!   "chain": {"labels": ["-4", "5"], "transition": [[0.5, 0.5], [0.5, 0.5]],
//!             "net_gen": [-4, 5]},
//!   "gamma": 0.95,
//!   "initial_occupancy": "half",
//!   "initial_background": 0,
//!   "schedule": {"steps": 100000, "beta0": 0.01, "seed": 0}
//! }
//! ```
//!
//! Every field except `batteries` and `chain` has a default. Energy fields are
//! integers; a fractional capacity is a parse error.

use std::fs;
use std::path::Path;

use battbank_core::{BackgroundChain, BankConfig, BatteryConfig, InitialOccupancy, LearnSchedule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryEntry {
    pub capacity: u32,
    pub ramp: u32,
    #[serde(default = "one")]
    pub dissipation: f64,
    pub penalty_weight: f64,
    #[serde(default = "default_lower")]
    pub lower_frac: f64,
    #[serde(default = "default_upper")]
    pub upper_frac: f64,
}

fn one() -> f64 {
    1.0
}

fn default_lower() -> f64 {
    BatteryConfig::DEFAULT_LOWER_FRAC
}

fn default_upper() -> f64 {
    BatteryConfig::DEFAULT_UPPER_FRAC
}

fn default_gamma() -> f64 {
    BankConfig::DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainEntry {
    pub labels: Vec<String>,
    pub transition: Vec<Vec<f64>>,
    pub net_gen: Vec<i64>,
}

/// `"half"` or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OccupancyEntry {
    Keyword(HalfKeyword),
    Explicit(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfKeyword {
    Half,
}

impl Default for OccupancyEntry {
    fn default() -> Self {
        OccupancyEntry::Keyword(HalfKeyword::Half)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleEntry {
    pub steps: u64,
    pub beta0: f64,
    pub beta_tau: f64,
    pub eps0: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
    pub seed: u64,
    pub normalize_step: bool,
}

impl Default for ScheduleEntry {
    fn default() -> Self {
        LearnSchedule::default().into()
    }
}

impl From<LearnSchedule> for ScheduleEntry {
    fn from(s: LearnSchedule) -> Self {
        Self {
            steps: s.steps,
            beta0: s.beta0,
            beta_tau: s.beta_tau,
            eps0: s.eps0,
            eps_min: s.eps_min,
            eps_decay: s.eps_decay,
            seed: s.seed,
            normalize_step: s.normalize_step,
        }
    }
}

impl From<&ScheduleEntry> for LearnSchedule {
    fn from(s: &ScheduleEntry) -> Self {
        LearnSchedule {
            steps: s.steps,
            beta0: s.beta0,
            beta_tau: s.beta_tau,
            eps0: s.eps0,
            eps_min: s.eps_min,
            eps_decay: s.eps_decay,
            seed: s.seed,
            normalize_step: s.normalize_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub batteries: Vec<BatteryEntry>,
    pub chain: ChainEntry,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub initial_occupancy: OccupancyEntry,
    #[serde(default)]
    pub initial_background: usize,
    #[serde(default)]
    pub schedule: ScheduleEntry,
}

/// Parsed configuration in core types.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub bank: BankConfig,
    pub chain: BackgroundChain,
    pub schedule: LearnSchedule,
    pub x0: usize,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn into_experiment(self) -> Experiment {
        let batteries = self
            .batteries
            .iter()
            .map(|b| BatteryConfig {
                capacity: b.capacity,
                ramp: b.ramp,
                dissipation: b.dissipation,
                penalty_weight: b.penalty_weight,
                lower_frac: b.lower_frac,
                upper_frac: b.upper_frac,
            })
            .collect();
        let initial_occupancy = match self.initial_occupancy {
            OccupancyEntry::Keyword(HalfKeyword::Half) => InitialOccupancy::Half,
            OccupancyEntry::Explicit(v) => InitialOccupancy::Explicit(v),
        };
        Experiment {
            bank: BankConfig {
                batteries,
                gamma: self.gamma,
                initial_occupancy,
            },
            chain: BackgroundChain::new(
                self.chain.labels,
                self.chain.transition,
                self.chain.net_gen,
            ),
            schedule: LearnSchedule::from(&self.schedule),
            x0: self.initial_background,
        }
    }

    pub fn from_experiment(exp: &Experiment) -> Self {
        ConfigFile {
            batteries: exp
                .bank
                .batteries
                .iter()
                .map(|b| BatteryEntry {
                    capacity: b.capacity,
                    ramp: b.ramp,
                    dissipation: b.dissipation,
                    penalty_weight: b.penalty_weight,
                    lower_frac: b.lower_frac,
                    upper_frac: b.upper_frac,
                })
                .collect(),
            chain: ChainEntry {
                labels: exp.chain.labels.clone(),
                transition: exp.chain.transition.clone(),
                net_gen: exp.chain.net_gen.clone(),
            },
            gamma: exp.bank.gamma,
            initial_occupancy: match &exp.bank.initial_occupancy {
                InitialOccupancy::Half => OccupancyEntry::default(),
                InitialOccupancy::Explicit(v) => OccupancyEntry::Explicit(v.clone()),
            },
            initial_background: exp.x0,
            schedule: exp.schedule.clone().into(),
        }
    }
}

pub fn load_experiment(path: &Path) -> Result<Experiment, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = ConfigFile::parse(&text).map_err(|e| CliError::parse(path, e))?;
    Ok(file.into_experiment())
}
