//! Accuracy oracles: whatever stands behind "train this path and measure it".

mod external;
mod synthetic;
mod table;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PathSpec, Scenario};

pub use external::{ExternalOracle, OracleRequest, OracleResponse, DEFAULT_TIMEOUT};
pub use synthetic::SyntheticOracle;
pub use table::{FixtureEntry, TableFixture, TableOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostHint {
    Cheap,
    Expensive,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no accuracy recorded for path {path} and no default configured")]
    Miss { path: String },
    #[error("oracle did not answer within {0:?}")]
    Timeout(Duration),
    #[error("oracle protocol error: {0}")]
    Protocol(String),
    #[error("oracle returned accuracy {0} outside [0, 1]")]
    Range(f64),
    #[error("oracle process i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

/// Maps a path to its accuracy as a fraction in `[0, 1]`.
///
/// Implementations must be deterministic for a fixed configuration.
pub trait AccuracyOracle: Send + Sync {
    fn evaluate(&self, path: &PathSpec, scenario: &Scenario) -> Result<f64, OracleError>;

    fn cost_hint(&self) -> CostHint;
}

impl<T: AccuracyOracle + ?Sized> AccuracyOracle for &T {
    fn evaluate(&self, path: &PathSpec, scenario: &Scenario) -> Result<f64, OracleError> {
        (**self).evaluate(path, scenario)
    }

    fn cost_hint(&self) -> CostHint {
        (**self).cost_hint()
    }
}

impl<T: AccuracyOracle + ?Sized> AccuracyOracle for Box<T> {
    fn evaluate(&self, path: &PathSpec, scenario: &Scenario) -> Result<f64, OracleError> {
        (**self).evaluate(path, scenario)
    }

    fn cost_hint(&self) -> CostHint {
        (**self).cost_hint()
    }
}

pub(crate) fn check_fraction(value: f64) -> Result<f64, OracleError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(OracleError::Range(value))
    }
}
