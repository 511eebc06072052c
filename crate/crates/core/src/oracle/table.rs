use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_fraction, AccuracyOracle, CostHint, OracleError};
use crate::model::{ConnectionKind, PathSpec, Scenario};

/// One fixture row. Skip rows may carry any host coordinates (conventionally `n_f`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub r_p: [usize; 4],
    pub kind: ConnectionKind,
    pub accuracy: f64,
}

/// On-disk table: either a bare array of entries or an object with an optional default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableFixture {
    Entries(Vec<FixtureEntry>),
    WithDefault {
        entries: Vec<FixtureEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<f64>,
    },
}

/// Accuracies looked up from a fixed table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableOracle {
    entries: HashMap<PathSpec, f64>,
    default: Option<f64>,
}

impl TableOracle {
    pub fn new(default: Option<f64>) -> Result<Self, OracleError> {
        if let Some(d) = default {
            check_fraction(d)?;
        }
        Ok(Self {
            entries: HashMap::new(),
            default,
        })
    }

    pub fn insert(&mut self, path: PathSpec, accuracy: f64) -> Result<(), OracleError> {
        let accuracy = check_fraction(accuracy)?;
        if self.entries.insert(path, accuracy).is_some() {
            return Err(OracleError::Config(format!(
                "duplicate table entry for {path}"
            )));
        }
        Ok(())
    }

    pub fn from_fixture(fixture: &TableFixture) -> Result<Self, OracleError> {
        let (entries, default) = match fixture {
            TableFixture::Entries(e) => (e, None),
            TableFixture::WithDefault { entries, default } => (entries, *default),
        };
        let mut table = Self::new(default)?;
        for e in entries {
            if e.kind == ConnectionKind::Skip && e.r_p[1] != e.r_p[2] {
                return Err(OracleError::Config(format!(
                    "skip entry {:?} must repeat the sentinel in both host coordinates",
                    e.r_p
                )));
            }
            table.insert(PathSpec::from_vector(e.r_p, e.kind), e.accuracy)?;
        }
        Ok(table)
    }

    /// Fixture with entries in path order; skip rows are written with `n_f`.
    pub fn to_fixture(&self, n_f: usize) -> TableFixture {
        let mut paths: Vec<_> = self.entries.iter().collect();
        paths.sort_by_key(|(p, _)| **p);
        let entries = paths
            .into_iter()
            .map(|(p, &accuracy)| FixtureEntry {
                r_p: p.vector(n_f),
                kind: p.kind(),
                accuracy,
            })
            .collect();
        TableFixture::WithDefault {
            entries,
            default: self.default,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, path: &PathSpec) -> Result<f64, OracleError> {
        self.entries
            .get(path)
            .copied()
            .or(self.default)
            .ok_or_else(|| OracleError::Miss {
                path: path.to_string(),
            })
    }
}

impl AccuracyOracle for TableOracle {
    fn evaluate(&self, path: &PathSpec, _scenario: &Scenario) -> Result<f64, OracleError> {
        self.lookup(path)
    }

    fn cost_hint(&self) -> CostHint {
        CostHint::Cheap
    }
}
