//! The three commands, as library functions returning in-memory reports.

use pathplan_core::{
    baseline_throughput, brute_force, code_search, enumerate_paths, is_admissible, path_throughput,
    simulate as run_sim, FixtureEntry, ModelError, PathSpec, PathThroughput, SimConfig,
    TableFixture,
};
use rayon::prelude::*;

use crate::error::CliError;
use crate::report::{
    BaselineRow, EnumerateReport, MetricsRow, PathRow, SearchMethod, SearchReport, SimRow,
    SimulateReport, StageRow,
};
use crate::schema::{LoadedScenario, OracleOverrides, OracleSpec};

pub const DEFAULT_BATCHES: usize = 1100;
pub const DEFAULT_WARMUP: usize = 100;

/// Parses `lout,hin,hout,lin`. Host coordinates equal to `n_f` mean a skip path.
pub fn parse_path(text: &str, n_f: usize) -> Result<PathSpec, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || {
        CliError::Usage(format!(
            "--path expects four comma-separated integers, got {text:?}"
        ))
    };
    if parts.len() != 4 {
        return Err(bad());
    }
    let mut r = [0usize; 4];
    for (slot, part) in r.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| bad())?;
    }
    if r[1] == n_f && r[2] == n_f {
        Ok(PathSpec::skip(r[0], r[3]))
    } else {
        Ok(PathSpec::cross(r[0], r[1], r[2], r[3]))
    }
}

fn throughput_of(loaded: &LoadedScenario, path: &PathSpec) -> Result<PathThroughput, CliError> {
    path_throughput(&loaded.scenario, path).map_err(|e| CliError::Invalid {
        field: "s".into(),
        message: e.to_string(),
    })
}

/// Lists every path with its throughput. `jobs` spreads the work over a thread pool.
pub fn enumerate(
    loaded: &LoadedScenario,
    jobs: Option<usize>,
) -> Result<EnumerateReport, CliError> {
    let sc = &loaded.scenario;
    let baseline = baseline_throughput(sc);
    let paths = enumerate_paths(sc);
    let row = |p: &PathSpec| -> Result<PathRow, CliError> {
        let tp = throughput_of(loaded, p)?;
        Ok(PathRow::new(
            p,
            &tp,
            &baseline,
            sc.n_f,
            is_admissible(sc, &tp),
        ))
    };
    let rows: Vec<PathRow> = match jobs {
        None | Some(1) => paths.iter().map(row).collect::<Result<_, _>>()?,
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("--jobs {n}: {e}")))?;
            pool.install(|| paths.par_iter().map(row).collect::<Result<_, _>>())?
        }
    };
    Ok(EnumerateReport {
        scenario_id: sc.scenario_id.clone(),
        n_l: sc.local.num_blocks(),
        n_h: sc.host_blocks(),
        s: sc.offload_count,
        n_f: sc.n_f,
        baseline: baseline.into(),
        path_count: rows.len(),
        admissible_count: rows.iter().filter(|r| r.admissible).count(),
        paths: rows,
    })
}

/// A table fixture listing every enumerated path, with the local base
/// accuracy as a placeholder to be overwritten by measured values.
pub fn fixture_skeleton(report: &EnumerateReport) -> TableFixture {
    TableFixture::WithDefault {
        entries: report
            .paths
            .iter()
            .map(|r| FixtureEntry {
                r_p: r.r_p,
                kind: r.kind,
                accuracy: report.baseline.a_0,
            })
            .collect(),
        default: None,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    pub brute_force: bool,
    pub overrides: OracleOverrides,
}

pub fn search(loaded: &LoadedScenario, opts: SearchOptions) -> Result<SearchReport, CliError> {
    let sc = &loaded.scenario;
    let oracle = loaded.oracle(opts.overrides)?;
    let (method, result) = if opts.brute_force {
        (
            SearchMethod::BruteForce,
            brute_force(sc, &oracle, &loaded.search)?,
        )
    } else {
        (
            SearchMethod::Code,
            code_search(sc, &oracle, &loaded.search)?,
        )
    };
    let seed = match loaded.file.oracle {
        OracleSpec::Synthetic { seed, .. } => Some(opts.overrides.seed.unwrap_or(seed)),
        _ => None,
    };
    let baseline = result.baseline;
    Ok(SearchReport {
        scenario_id: sc.scenario_id.clone(),
        method,
        seed,
        baseline: BaselineRow::from(baseline),
        admissible_count: result.admissible_count,
        oracle_calls: result.evaluated.len(),
        stages_run: result.stages_run,
        termination: result.termination,
        best: MetricsRow::new(&result.best, &baseline, sc.n_f),
        trace: result
            .trace
            .iter()
            .map(|r| StageRow::new(r, sc.n_f))
            .collect(),
        evaluated: result
            .evaluated
            .iter()
            .map(|m| MetricsRow::new(m, &baseline, sc.n_f))
            .collect(),
    })
}

fn rel_error(measured: f64, analytic: f64) -> f64 {
    (measured - analytic).abs() / analytic
}

fn sim_row(
    loaded: &LoadedScenario,
    path: Option<PathSpec>,
    n_batches: usize,
    warmup: usize,
) -> Result<SimRow, CliError> {
    let sc = &loaded.scenario;
    let analytic = match &path {
        Some(p) => throughput_of(loaded, p)?,
        None => {
            let base = baseline_throughput(sc);
            PathThroughput {
                th_local: base.th_0,
                th_host: 0.0,
                th_total: base.th_0,
                t_local_cycle: base.t_0,
                t_host_cycle: 0.0,
                bottleneck: pathplan_core::Bottleneck::Local,
                host_own_throughput: sc
                    .host
                    .as_ref()
                    .map(|h| h.batch_size as f64 / h.full_batch_time()),
            }
        }
    };
    let cfg = SimConfig {
        scenario: sc.clone(),
        path,
        n_batches,
        warmup_batches: warmup,
    };
    let rep = run_sim(&cfg)?;
    Ok(SimRow {
        r_p: path.map(|p| p.vector(sc.n_f)),
        kind: path.map(|p| p.kind()),
        analytic_th_total: analytic.th_total,
        measured_th_total: rep.measured_th_total,
        rel_error: rel_error(rep.measured_th_total, analytic.th_total),
        analytic_th_local: analytic.th_local,
        measured_th_local: rep.measured_th_local,
        analytic_th_host: analytic.th_host,
        measured_th_host: rep.measured_th_host,
        analytic_host_own: analytic.host_own_throughput,
        measured_host_own: rep.host_own_throughput,
        completed_batches: rep.completed_batches,
        measured_batches: rep.measured_batches,
        samples_completed: rep.samples_completed,
        makespan: rep.makespan,
        event_count: rep.event_count,
    })
}

/// Simulates the baseline and, when given, one path.
pub fn simulate(
    loaded: &LoadedScenario,
    path: Option<PathSpec>,
    n_batches: usize,
    warmup: usize,
) -> Result<SimulateReport, CliError> {
    if let Some(p) = &path {
        p.validate(&loaded.scenario).map_err(|e| match e {
            ModelError::IllegalPath { constraint, .. } => CliError::Invalid {
                field: "--path".into(),
                message: format!("{}: {constraint}", display_vector(p, loaded)),
            },
            other => CliError::Invalid {
                field: "--path".into(),
                message: other.to_string(),
            },
        })?;
    }
    if n_batches <= warmup {
        return Err(CliError::Usage(format!(
            "--batches ({n_batches}) must exceed --warmup ({warmup})"
        )));
    }
    let mut rows = vec![sim_row(loaded, None, n_batches, warmup)?];
    if path.is_some() {
        rows.push(sim_row(loaded, path, n_batches, warmup)?);
    }
    Ok(SimulateReport {
        scenario_id: loaded.scenario.scenario_id.clone(),
        n_batches,
        warmup_batches: warmup,
        rows,
    })
}

fn display_vector(p: &PathSpec, loaded: &LoadedScenario) -> String {
    let r = p.vector(loaded.scenario.n_f);
    format!("[{},{},{},{}]", r[0], r[1], r[2], r[3])
}
