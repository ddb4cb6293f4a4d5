//! Experiment driver for `rlchs-core`: INI configuration, benchmark and
//! trace sweeps, CSV output and the `rlchs` command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod scenario;
pub mod validate;

use rlchs_core::error::Error as CoreError;

/// Driver failures, each tied to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(CoreError),
    #[error("i/o: {0}")]
    Io(String),
}

impl AppError {
    /// 1 usage, 2 numerical or contract failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Numerical(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parameter(_) | CoreError::Dimension(_) | CoreError::SizeLimit(_) => Self::Usage(e.to_string()),
            CoreError::Numerical(_) | CoreError::Contract(_) => Self::Numerical(e),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}
