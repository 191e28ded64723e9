//! File formats, parallel comparison and the command-line driver for the
//! battery-bank model in `battbank-core`.
//!
//! - [`config_file`]: JSON experiment configuration.
//! - [`weights_file`]: versioned, fingerprinted weight files.
//! - [`trajectory_file`]: plain-text background trajectories.
//! - [`reports`]: CSV and aligned-text reports.
//! - [`parallel`]: rayon-parallel policy comparison.
//! - [`cli`]: subcommands and their exit codes.

pub mod cli;
pub mod config_file;
pub mod error;
pub mod parallel;
pub mod reports;
pub mod trajectory_file;
pub mod weights_file;

pub use error::CliError;
