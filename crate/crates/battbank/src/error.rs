//! Error type shared by the file formats and subcommands, with exit codes.

use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration parsed but violates a model invariant.
    #[error("validation failed:\n{0}")]
    Validation(String),
    /// Training, solving or evaluation failed on a valid configuration.
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    /// The file was readable but its contents are malformed.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl CliError {
    pub const EXIT_VALIDATION: i32 = 1;
    pub const EXIT_RUNTIME: i32 = 2;
    pub const EXIT_IO: i32 = 3;

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => Self::EXIT_VALIDATION,
            CliError::Runtime(_) => Self::EXIT_RUNTIME,
            CliError::Io { .. } | CliError::Parse { .. } => Self::EXIT_IO,
        }
    }
}
