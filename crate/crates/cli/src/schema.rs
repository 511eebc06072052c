//! On-disk scenario documents.
//!
//! Parsing is strict: unknown keys are rejected and every semantic check
//! names the offending field by its JSON path, so a typo in a fixture
//! fails before anything is computed.

use std::path::{Path, PathBuf};
use std::time::Duration;

use pathplan_core::{
    AccuracyOracle, Bootstrap, ExternalOracle, FixtureEntry, LinkProfile, PathSpec, RewardConfig,
    Scenario, SearchConfig, ServiceProfile, SkipLinkOverride, SyntheticOracle, TableFixture,
    TableOracle, DEFAULT_N_F, DEFAULT_SLOPE,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Affine cost `a + c * m` in seconds for `m` samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cost {
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_id: Option<String>,
    pub blocks: Vec<Cost>,
    pub batch_size: usize,
    pub base_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipOverride {
    pub lout: usize,
    pub lin: usize,
    pub a: f64,
    pub c: f64,
}

/// Entry and exit links run on the host, skip links on the local device.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinksSpec {
    #[serde(default)]
    pub entry: Cost,
    #[serde(default)]
    pub exit: Cost,
    #[serde(default)]
    pub skip: Cost,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skip_overrides: Vec<SkipOverride>,
}

fn default_k() -> f64 {
    DEFAULT_SLOPE
}

fn default_true() -> bool {
    true
}

fn default_n_f() -> usize {
    DEFAULT_N_F
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_k")]
    pub k: f64,
    pub a_min: f64,
    pub epsilon: f64,
    pub c_stop: usize,
    #[serde(default)]
    pub bootstrap: Bootstrap,
    #[serde(default = "default_true")]
    pub rebuild_q: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Inline rows, rows from a fixture file (relative to the scenario), or both.
    Table {
        #[serde(default)]
        entries: Vec<FixtureEntry>,
        #[serde(default)]
        default: Option<f64>,
        #[serde(default)]
        fixture: Option<PathBuf>,
    },
    Synthetic {
        base: f64,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        seed: u64,
    },
    External {
        command: Vec<String>,
        #[serde(default)]
        timeout_s: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_id: Option<String>,
    pub local: ServiceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<ServiceSpec>,
    #[serde(default)]
    pub links: LinksSpec,
    pub s: usize,
    #[serde(default = "default_n_f")]
    pub n_f: usize,
    pub search: SearchSpec,
    pub oracle: OracleSpec,
}

/// Per-run settings that are not part of the scenario document.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOverrides {
    /// Replaces the synthetic oracle's seed.
    pub seed: Option<u64>,
    /// Replaces the external oracle's timeout.
    pub timeout: Option<Duration>,
}

/// A validated scenario file together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub search: SearchConfig,
    base_dir: PathBuf,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses a scenario document, reporting the JSON path of the first problem.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| CliError::Schema {
        path: ".".into(),
        message: e.to_string(),
    })?;
    Ok(file)
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file = parse_scenario(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    LoadedScenario::new(file, base_dir, stem)
}

fn check_cost(field: &str, cost: &Cost, positive_c: bool) -> Result<(), CliError> {
    if !(cost.a.is_finite() && cost.a >= 0.0) {
        return Err(invalid(format!("{field}.a"), "must be finite and >= 0"));
    }
    let ok = cost.c.is_finite()
        && if positive_c {
            cost.c > 0.0
        } else {
            cost.c >= 0.0
        };
    if !ok {
        let bound = if positive_c { "> 0" } else { ">= 0" };
        return Err(invalid(
            format!("{field}.c"),
            format!("must be finite and {bound}"),
        ));
    }
    Ok(())
}

fn check_service(field: &str, svc: &ServiceSpec) -> Result<(), CliError> {
    if svc.blocks.is_empty() {
        return Err(invalid(
            format!("{field}.blocks"),
            "must list at least one block",
        ));
    }
    for (i, b) in svc.blocks.iter().enumerate() {
        check_cost(&format!("{field}.blocks[{i}]"), b, true)?;
    }
    if svc.batch_size == 0 {
        return Err(invalid(format!("{field}.batch_size"), "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&svc.base_accuracy) {
        return Err(invalid(
            format!("{field}.base_accuracy"),
            format!("{} is outside [0, 1]", svc.base_accuracy),
        ));
    }
    Ok(())
}

fn check_fraction(field: String, value: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(field, format!("{value} is outside [0, 1]")))
    }
}

impl ScenarioFile {
    /// Semantic checks that the type system cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        check_service("local", &self.local)?;
        if let Some(host) = &self.host {
            check_service("host", host)?;
        }
        check_cost("links.entry", &self.links.entry, false)?;
        check_cost("links.exit", &self.links.exit, false)?;
        check_cost("links.skip", &self.links.skip, false)?;
        let n_l = self.local.blocks.len();
        let n_h = self.host.as_ref().map_or(0, |h| h.blocks.len());
        for (i, o) in self.links.skip_overrides.iter().enumerate() {
            let field = format!("links.skip_overrides[{i}]");
            if !(o.lout < o.lin && o.lin < n_l) {
                return Err(invalid(
                    field,
                    "requires lout < lin < number of local blocks",
                ));
            }
            check_cost(&field, &Cost { a: o.a, c: o.c }, false)?;
        }
        if self.s > self.local.batch_size {
            return Err(invalid(
                "s",
                format!(
                    "offload count {} exceeds local.batch_size {}",
                    self.s, self.local.batch_size
                ),
            ));
        }
        if self.n_f <= n_l || self.n_f <= n_h {
            return Err(invalid(
                "n_f",
                format!("must exceed both block counts ({n_l}, {n_h})"),
            ));
        }
        let search = &self.search;
        if !(search.k.is_finite() && search.k > 0.0) {
            return Err(invalid("search.k", "must be finite and > 0"));
        }
        if !(search.a_min > 0.0 && search.a_min < 1.0) {
            return Err(invalid("search.a_min", "must lie in (0, 1)"));
        }
        if !(search.epsilon.is_finite() && search.epsilon >= 0.0) {
            return Err(invalid("search.epsilon", "must be finite and >= 0"));
        }
        if search.c_stop == 0 {
            return Err(invalid("search.c_stop", "must be at least 1"));
        }
        if search.max_stages == Some(0) {
            return Err(invalid("search.max_stages", "must be at least 1"));
        }
        if search.max_evaluations == Some(0) {
            return Err(invalid("search.max_evaluations", "must be at least 1"));
        }
        match &self.oracle {
            OracleSpec::Table {
                entries, default, ..
            } => {
                if let Some(d) = default {
                    check_fraction("oracle.default".into(), *d)?;
                }
                for (i, e) in entries.iter().enumerate() {
                    check_fraction(format!("oracle.entries[{i}].accuracy"), e.accuracy)?;
                }
            }
            OracleSpec::Synthetic {
                base,
                alpha,
                beta,
                sigma,
                ..
            } => {
                check_fraction("oracle.base".into(), *base)?;
                for (name, v) in [("alpha", alpha), ("beta", beta), ("sigma", sigma)] {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(invalid(format!("oracle.{name}"), "must be finite and >= 0"));
                    }
                }
            }
            OracleSpec::External { command, timeout_s } => {
                if command.is_empty() {
                    return Err(invalid("oracle.command", "must name an executable"));
                }
                if let Some(t) = timeout_s {
                    if !(t.is_finite() && *t > 0.0) {
                        return Err(invalid("oracle.timeout_s", "must be finite and > 0"));
                    }
                }
            }
        }
        Ok(())
    }

    fn service(&self, spec: &ServiceSpec, default_id: &str) -> ServiceProfile {
        let costs: Vec<(f64, f64)> = spec.blocks.iter().map(|b| (b.a, b.c)).collect();
        let id = spec
            .service_id
            .clone()
            .unwrap_or_else(|| default_id.to_string());
        ServiceProfile::from_costs(id, &costs, spec.batch_size, spec.base_accuracy)
    }

    /// Builds the core scenario. Call [`ScenarioFile::validate`] first.
    pub fn to_scenario(&self, default_id: &str) -> Scenario {
        let id = self
            .scenario_id
            .clone()
            .unwrap_or_else(|| default_id.to_string());
        let mut sc = Scenario::new(
            id,
            self.service(&self.local, "local"),
            self.host.as_ref().map(|h| self.service(h, "host")),
            self.s,
        );
        let links = &self.links;
        sc.entry_link = LinkProfile::on_host(links.entry.a, links.entry.c);
        sc.exit_link = LinkProfile::on_host(links.exit.a, links.exit.c);
        sc.skip_link = LinkProfile::on_local(links.skip.a, links.skip.c);
        sc.skip_overrides = links
            .skip_overrides
            .iter()
            .map(|o| SkipLinkOverride {
                lout: o.lout,
                lin: o.lin,
                link: LinkProfile::on_local(o.a, o.c),
            })
            .collect();
        sc.n_f = self.n_f;
        sc
    }

    pub fn to_search_config(&self) -> Result<SearchConfig, CliError> {
        let s = &self.search;
        let reward =
            RewardConfig::new(s.k, s.a_min).map_err(|e| invalid("search", e.to_string()))?;
        let mut cfg = SearchConfig::new(reward, s.epsilon, s.c_stop);
        cfg.bootstrap = s.bootstrap;
        cfg.rebuild_q = s.rebuild_q;
        cfg.max_stages = s.max_stages;
        if let Some(m) = s.max_evaluations {
            cfg.max_evaluations = m;
        }
        Ok(cfg)
    }
}

impl LoadedScenario {
    /// Validates `file`; `base_dir` resolves relative fixture paths.
    pub fn new(file: ScenarioFile, base_dir: PathBuf, default_id: &str) -> Result<Self, CliError> {
        file.validate()?;
        let scenario = file.to_scenario(default_id);
        scenario
            .validate()
            .map_err(|e| invalid("scenario", e.to_string()))?;
        if let OracleSpec::Table { entries, .. } = &file.oracle {
            for (i, e) in entries.iter().enumerate() {
                PathSpec::from_vector(e.r_p, e.kind)
                    .validate(&scenario)
                    .map_err(|err| invalid(format!("oracle.entries[{i}].r_p"), err.to_string()))?;
            }
        }
        let search = file.to_search_config()?;
        Ok(Self {
            file,
            scenario,
            search,
            base_dir,
        })
    }

    fn table_oracle(
        &self,
        entries: &[FixtureEntry],
        default: Option<f64>,
        fixture: Option<&Path>,
    ) -> Result<TableOracle, CliError> {
        let mut rows = entries.to_vec();
        let mut default = default;
        if let Some(rel) = fixture {
            let path = self.base_dir.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let mut de = serde_json::Deserializer::from_str(&text);
            let table: TableFixture =
                serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Schema {
                    path: format!("oracle.fixture ({}) {}", path.display(), e.path()),
                    message: e.into_inner().to_string(),
                })?;
            match table {
                TableFixture::Entries(more) => rows.extend(more),
                TableFixture::WithDefault {
                    entries,
                    default: d,
                } => {
                    rows.extend(entries);
                    default = default.or(d);
                }
            }
        }
        let fixture = TableFixture::WithDefault {
            entries: rows,
            default,
        };
        TableOracle::from_fixture(&fixture).map_err(|e| invalid("oracle", e.to_string()))
    }

    /// Instantiates the configured oracle.
    pub fn oracle(&self, overrides: OracleOverrides) -> Result<Box<dyn AccuracyOracle>, CliError> {
        Ok(match &self.file.oracle {
            OracleSpec::Table {
                entries,
                default,
                fixture,
            } => Box::new(self.table_oracle(entries, *default, fixture.as_deref())?),
            OracleSpec::Synthetic {
                base,
                alpha,
                beta,
                sigma,
                seed,
            } => {
                let seed = overrides.seed.unwrap_or(*seed);
                let oracle = SyntheticOracle::new(*base, *alpha, *beta, *sigma, seed)
                    .map_err(|e| invalid("oracle", e.to_string()))?;
                Box::new(oracle)
            }
            OracleSpec::External { command, timeout_s } => {
                let timeout = overrides
                    .timeout
                    .or_else(|| timeout_s.map(Duration::from_secs_f64))
                    .unwrap_or(pathplan_core::oracle::DEFAULT_TIMEOUT);
                let oracle = ExternalOracle::new(command, timeout)
                    .map_err(|e| invalid("oracle.command", e.to_string()))?;
                Box::new(oracle)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "local": {"blocks": [{"a": 0.0, "c": 0.001}, {"a": 0.0, "c": 0.004}, {"a": 0.0, "c": 0.001}],
                  "batch_size": 8, "base_accuracy": 0.9},
        "s": 2,
        "search": {"a_min": 0.85, "epsilon": 0.01, "c_stop": 3},
        "oracle": {"type": "synthetic", "base": 0.88, "alpha": 0.2, "beta": 0.0}
    }"#;

    fn err_of(text: &str) -> CliError {
        let file = match parse_scenario(text) {
            Ok(f) => f,
            Err(e) => return e,
        };
        LoadedScenario::new(file, PathBuf::new(), "t").unwrap_err()
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let file = parse_scenario(MINIMAL).unwrap();
        let loaded = LoadedScenario::new(file, PathBuf::new(), "mini").unwrap();
        assert_eq!(loaded.scenario.scenario_id, "mini");
        assert_eq!(loaded.scenario.n_f, DEFAULT_N_F);
        assert_eq!(loaded.search.reward.k, DEFAULT_SLOPE);
        assert!(loaded.search.rebuild_q);
        assert_eq!(loaded.search.bootstrap, Bootstrap::FirstAdmissible);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let text = MINIMAL.replace(r#""batch_size": 8"#, r#""batch_size": 8, "batchsize": 8"#);
        match err_of(&text) {
            CliError::Schema { path, message } => {
                assert_eq!(path, "local.batchsize");
                assert!(message.contains("batchsize"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_type_error_names_its_path() {
        let text = MINIMAL.replace(r#""c": 0.004"#, r#""c": "fast""#);
        match err_of(&text) {
            CliError::Schema { path, .. } => assert_eq!(path, "local.blocks[1].c"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_oracle_key_is_rejected() {
        let text = MINIMAL.replace(r#""beta": 0.0"#, r#""beta": 0.0, "gamma": 1"#);
        assert!(matches!(err_of(&text), CliError::Schema { .. }));
    }

    #[test]
    fn semantic_errors_name_fields() {
        let cases = [
            (MINIMAL.replace(r#""s": 2"#, r#""s": 9"#), "s"),
            (
                MINIMAL.replace(r#""c": 0.004"#, r#""c": 0.0"#),
                "local.blocks[1].c",
            ),
            (
                MINIMAL.replace(r#""base_accuracy": 0.9"#, r#""base_accuracy": 90"#),
                "local.base_accuracy",
            ),
            (
                MINIMAL.replace(r#""a_min": 0.85"#, r#""a_min": 1.5"#),
                "search.a_min",
            ),
            (
                MINIMAL.replace(r#""c_stop": 3"#, r#""c_stop": 0"#),
                "search.c_stop",
            ),
            (MINIMAL.replace(r#""s": 2"#, r#""s": 2, "n_f": 3"#), "n_f"),
        ];
        for (text, want) in cases {
            match err_of(&text) {
                CliError::Invalid { field, .. } => assert_eq!(field, want),
                other => panic!("{want}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn table_rows_are_checked_against_the_scenario() {
        let text = MINIMAL.replace(
            r#"{"type": "synthetic", "base": 0.88, "alpha": 0.2, "beta": 0.0}"#,
            r#"{"type": "table", "entries": [{"r_p": [2, 100, 100, 1], "kind": "skip", "accuracy": 0.5}]}"#,
        );
        match err_of(&text) {
            CliError::Invalid { field, message } => {
                assert_eq!(field, "oracle.entries[0].r_p");
                assert!(message.contains("lout < lin"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_is_a_schema_error() {
        assert!(matches!(
            parse_scenario(&format!("{MINIMAL} x")),
            Err(CliError::Schema { .. })
        ));
    }

    #[test]
    fn seed_override_reaches_the_synthetic_oracle() {
        let text = MINIMAL.replace(r#""beta": 0.0"#, r#""beta": 0.0, "sigma": 0.05, "seed": 1"#);
        let loaded =
            LoadedScenario::new(parse_scenario(&text).unwrap(), PathBuf::new(), "t").unwrap();
        let path = PathSpec::skip(0, 2);
        let eval = |seed| {
            let o = loaded
                .oracle(OracleOverrides {
                    seed,
                    timeout: None,
                })
                .unwrap();
            o.evaluate(&path, &loaded.scenario).unwrap()
        };
        assert_eq!(eval(None), eval(Some(1)));
        assert_ne!(eval(Some(1)), eval(Some(2)));
    }
}
