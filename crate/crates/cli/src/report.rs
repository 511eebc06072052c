//! Report documents written by the commands.
//!
//! Every report has a JSON form that deserializes back into the same
//! value, and one or more CSV tables whose rows carry the path vector.

use std::fs;
use std::path::Path;

use pathplan_core::{
    BaselineMetrics, Bottleneck, ConnectionKind, PathMetrics, PathSpec, PathThroughput,
    StageRecord, Termination,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub th_0: f64,
    pub t_0: f64,
    pub a_0: f64,
}

impl From<BaselineMetrics> for BaselineRow {
    fn from(b: BaselineMetrics) -> Self {
        Self {
            th_0: b.th_0,
            t_0: b.t_0,
            a_0: b.a_0,
        }
    }
}

/// Throughput of one path as listed by `enumerate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub r_p: [usize; 4],
    pub kind: ConnectionKind,
    pub th_total: f64,
    pub th_local: f64,
    pub th_host: f64,
    pub th_ratio: f64,
    pub t_local_cycle: f64,
    pub t_host_cycle: f64,
    pub bottleneck: Bottleneck,
    pub host_own_throughput: Option<f64>,
    pub admissible: bool,
}

impl PathRow {
    pub fn new(
        path: &PathSpec,
        tp: &PathThroughput,
        baseline: &BaselineMetrics,
        n_f: usize,
        admissible: bool,
    ) -> Self {
        Self {
            r_p: path.vector(n_f),
            kind: path.kind(),
            th_total: tp.th_total,
            th_local: tp.th_local,
            th_host: tp.th_host,
            th_ratio: tp.th_total / baseline.th_0,
            t_local_cycle: tp.t_local_cycle,
            t_host_cycle: tp.t_host_cycle,
            bottleneck: tp.bottleneck,
            host_own_throughput: tp.host_own_throughput,
            admissible,
        }
    }
}

/// Accuracy and reward of one evaluated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub r_p: [usize; 4],
    pub kind: ConnectionKind,
    pub th_total: f64,
    pub th_local: f64,
    pub th_host: f64,
    pub th_ratio: f64,
    pub bottleneck: Bottleneck,
    pub a_p: f64,
    pub a_av: f64,
    pub accuracy_reward: f64,
    pub throughput_reward: f64,
    pub reward: f64,
}

impl MetricsRow {
    pub fn new(m: &PathMetrics, baseline: &BaselineMetrics, n_f: usize) -> Self {
        Self {
            r_p: m.path.vector(n_f),
            kind: m.path.kind(),
            th_total: m.throughput.th_total,
            th_local: m.throughput.th_local,
            th_host: m.throughput.th_host,
            th_ratio: m.throughput.th_total / baseline.th_0,
            bottleneck: m.throughput.bottleneck,
            a_p: m.a_p,
            a_av: m.a_av,
            accuracy_reward: m.accuracy_reward,
            throughput_reward: m.throughput_reward,
            reward: m.reward,
        }
    }

    pub fn path(&self) -> PathSpec {
        PathSpec::from_vector(self.r_p, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: usize,
    pub r_p: [usize; 4],
    pub kind: ConnectionKind,
    pub predicted_reward: Option<f64>,
    pub true_accuracy: f64,
    pub true_reward: f64,
    pub c_after: usize,
}

impl StageRow {
    pub fn new(rec: &StageRecord, n_f: usize) -> Self {
        Self {
            stage: rec.stage,
            r_p: rec.predicted_best.vector(n_f),
            kind: rec.predicted_best.kind(),
            predicted_reward: rec.predicted_reward,
            true_accuracy: rec.true_accuracy,
            true_reward: rec.true_reward,
            c_after: rec.c_after,
        }
    }
}

/// Analytic versus simulated throughput of one path (or the baseline).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    /// `None` for the unmodified local model.
    pub r_p: Option<[usize; 4]>,
    pub kind: Option<ConnectionKind>,
    pub analytic_th_total: f64,
    pub measured_th_total: f64,
    pub rel_error: f64,
    pub analytic_th_local: f64,
    pub measured_th_local: f64,
    pub analytic_th_host: f64,
    pub measured_th_host: f64,
    pub analytic_host_own: Option<f64>,
    pub measured_host_own: Option<f64>,
    pub completed_batches: usize,
    pub measured_batches: usize,
    pub samples_completed: u64,
    pub makespan: f64,
    pub event_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Code,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateReport {
    pub scenario_id: String,
    pub n_l: usize,
    pub n_h: usize,
    pub s: usize,
    pub n_f: usize,
    pub baseline: BaselineRow,
    pub path_count: usize,
    pub admissible_count: usize,
    pub paths: Vec<PathRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub scenario_id: String,
    pub method: SearchMethod,
    pub seed: Option<u64>,
    pub baseline: BaselineRow,
    pub admissible_count: usize,
    pub oracle_calls: usize,
    pub stages_run: usize,
    pub termination: Termination,
    pub best: MetricsRow,
    pub trace: Vec<StageRow>,
    pub evaluated: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub scenario_id: String,
    pub n_batches: usize,
    pub warmup_batches: usize,
    pub rows: Vec<SimRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Report {
    Enumerate(EnumerateReport),
    Search(SearchReport),
    Simulate(SimulateReport),
}

/// A row that can be flattened into a CSV record.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

/// Shortest round-trip form, with an exponent for very small or large values.
fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn vector_cols(r_p: &[usize; 4], kind: ConnectionKind) -> [String; 5] {
    [
        r_p[0].to_string(),
        r_p[1].to_string(),
        r_p[2].to_string(),
        r_p[3].to_string(),
        kind.to_string(),
    ]
}

fn bottleneck_name(b: Bottleneck) -> String {
    match b {
        Bottleneck::Local => "local",
        Bottleneck::Host => "host",
    }
    .to_string()
}

impl CsvRow for PathRow {
    const HEADER: &'static [&'static str] = &[
        "lout",
        "hin",
        "hout",
        "lin",
        "kind",
        "th_total",
        "th_local",
        "th_host",
        "th_ratio",
        "t_local_cycle",
        "t_host_cycle",
        "bottleneck",
        "host_own_throughput",
        "admissible",
    ];

    fn record(&self) -> Vec<String> {
        let mut out = vector_cols(&self.r_p, self.kind).to_vec();
        out.extend([
            num(self.th_total),
            num(self.th_local),
            num(self.th_host),
            num(self.th_ratio),
            num(self.t_local_cycle),
            num(self.t_host_cycle),
            bottleneck_name(self.bottleneck),
            opt_num(self.host_own_throughput),
            self.admissible.to_string(),
        ]);
        out
    }
}

impl CsvRow for MetricsRow {
    const HEADER: &'static [&'static str] = &[
        "lout",
        "hin",
        "hout",
        "lin",
        "kind",
        "th_total",
        "th_local",
        "th_host",
        "th_ratio",
        "bottleneck",
        "a_p",
        "a_av",
        "accuracy_reward",
        "throughput_reward",
        "reward",
    ];

    fn record(&self) -> Vec<String> {
        let mut out = vector_cols(&self.r_p, self.kind).to_vec();
        out.extend([
            num(self.th_total),
            num(self.th_local),
            num(self.th_host),
            num(self.th_ratio),
            bottleneck_name(self.bottleneck),
            num(self.a_p),
            num(self.a_av),
            num(self.accuracy_reward),
            num(self.throughput_reward),
            num(self.reward),
        ]);
        out
    }
}

impl CsvRow for StageRow {
    const HEADER: &'static [&'static str] = &[
        "stage",
        "lout",
        "hin",
        "hout",
        "lin",
        "kind",
        "predicted_reward",
        "true_accuracy",
        "true_reward",
        "c_after",
    ];

    fn record(&self) -> Vec<String> {
        let mut out = vec![self.stage.to_string()];
        out.extend(vector_cols(&self.r_p, self.kind));
        out.extend([
            opt_num(self.predicted_reward),
            num(self.true_accuracy),
            num(self.true_reward),
            self.c_after.to_string(),
        ]);
        out
    }
}

impl CsvRow for SimRow {
    const HEADER: &'static [&'static str] = &[
        "lout",
        "hin",
        "hout",
        "lin",
        "kind",
        "analytic_th_total",
        "measured_th_total",
        "rel_error",
        "analytic_th_local",
        "measured_th_local",
        "analytic_th_host",
        "measured_th_host",
        "analytic_host_own",
        "measured_host_own",
        "completed_batches",
        "measured_batches",
        "samples_completed",
        "makespan",
        "event_count",
    ];

    fn record(&self) -> Vec<String> {
        let mut out = match (self.r_p, self.kind) {
            (Some(r), Some(k)) => vector_cols(&r, k).to_vec(),
            _ => vec![
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "baseline".into(),
            ],
        };
        out.extend([
            num(self.analytic_th_total),
            num(self.measured_th_total),
            num(self.rel_error),
            num(self.analytic_th_local),
            num(self.measured_th_local),
            num(self.analytic_th_host),
            num(self.measured_th_host),
            opt_num(self.analytic_host_own),
            opt_num(self.measured_host_own),
            self.completed_batches.to_string(),
            self.measured_batches.to_string(),
            self.samples_completed.to_string(),
            num(self.makespan),
            self.event_count.to_string(),
        ]);
        out
    }
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_csv<R: CsvRow>(path: &Path, rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(R::HEADER)
        .map_err(|e| output_error(path, e))?;
    for row in rows {
        w.write_record(row.record())
            .map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| output_error(path, e))
}

pub fn read_report(path: &Path) -> Result<Report, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

impl Report {
    /// Writes `report.json` plus the command's CSV tables into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_json(&dir.join("report.json"), self)?;
        match self {
            Report::Enumerate(r) => write_csv(&dir.join("paths.csv"), &r.paths),
            Report::Search(r) => {
                write_csv(&dir.join("evaluated.csv"), &r.evaluated)?;
                write_csv(&dir.join("trace.csv"), &r.trace)
            }
            Report::Simulate(r) => write_csv(&dir.join("sim.csv"), &r.rows),
        }
    }
}
