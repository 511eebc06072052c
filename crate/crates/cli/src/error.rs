use std::path::PathBuf;

use pathplan_core::{OracleError, PathSpec, SearchError, SimError};
use thiserror::Error;

/// Process exit codes. These values are part of the command-line contract.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const SCHEMA: u8 = 3;
    pub const ORACLE: u8 = 4;
    pub const NO_ADMISSIBLE_PATH: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("oracle failed on path {path}: {source}")]
    Oracle {
        path: PathSpec,
        #[source]
        source: OracleError,
    },
    #[error("no admissible path: every path is at most as fast as the baseline")]
    NoAdmissiblePath,
    #[error(transparent)]
    Search(SearchError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NoAdmissiblePath => CliError::NoAdmissiblePath,
            SearchError::Oracle { path, source } => CliError::Oracle { path, source },
            other => CliError::Search(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Output { .. } | CliError::Search(_) => exit::FAILURE,
            CliError::Usage(_) => exit::USAGE,
            CliError::Schema { .. } | CliError::Invalid { .. } | CliError::Sim(_) => exit::SCHEMA,
            CliError::Oracle { .. } => exit::ORACLE,
            CliError::NoAdmissiblePath => exit::NO_ADMISSIBLE_PATH,
        }
    }
}
