use std::path::PathBuf;

use statecap::channels::ChannelError;
use statecap::codingsim::SimError;
use statecap::solvers::SolverError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// I/O or other runtime failure.
    pub const RUNTIME: i32 = 1;
    /// Bad flags, or a channel model the command does not accept.
    pub const USAGE: i32 = 2;
    /// Channel file could not be parsed.
    pub const PARSE: i32 = 3;
    /// Channel file parsed but failed validation.
    pub const VALIDATION: i32 = 4;
    /// A strategy, codebook or oracle size cap was exceeded.
    pub const CAP: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: crate::channel_file::ParseError,
    },
    #[error("{path}: validation failed:\n{}", .failures.join("\n"))]
    Validation {
        path: PathBuf,
        failures: Vec<String>,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

fn channel_code(e: &ChannelError) -> i32 {
    match e {
        ChannelError::StrategyCapExceeded { .. } => exit::CAP,
        _ => exit::RUNTIME,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv(_) => exit::RUNTIME,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Validation { .. } => exit::VALIDATION,
            CliError::Usage(_) => exit::USAGE,
            CliError::Channel(e) => channel_code(e),
            CliError::Solver(e) => match e {
                SolverError::Channel(c) => channel_code(c),
                SolverError::OracleBudget { .. } => exit::CAP,
                SolverError::InvalidConfig(_) => exit::USAGE,
                SolverError::BcNotDegraded(_) | SolverError::RelayNotDegraded(_) => {
                    exit::VALIDATION
                }
                _ => exit::RUNTIME,
            },
            CliError::Sim(e) => match e {
                SimError::Channel(c) => channel_code(c),
                SimError::CodebookCap { .. } => exit::CAP,
                SimError::BcNotDegraded(_) | SimError::RelayNotDegraded(_) => exit::VALIDATION,
                SimError::InvalidConfig(_) => exit::USAGE,
                _ => exit::RUNTIME,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
