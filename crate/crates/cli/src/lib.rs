//! Command-line front end for the path planner: scenario files in, JSON and
//! CSV reports out. The `plan` binary is a thin wrapper around [`run`].

pub mod commands;
pub mod error;
pub mod report;
pub mod schema;

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

pub use error::{exit, CliError};
pub use report::Report;
pub use schema::{load_scenario, parse_scenario, LoadedScenario, OracleOverrides, ScenarioFile};

/// Environment variable overriding the external oracle timeout, in seconds.
pub const TIMEOUT_ENV: &str = "PLAN_ORACLE_TIMEOUT";

#[derive(Debug, Parser)]
#[command(
    name = "plan",
    version,
    about = "Plan inference paths between a local and a host DNN service"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario document (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for report.json and the CSV tables.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every path with its throughput and admissibility.
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 picks the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Search for the highest-reward path.
    Search {
        #[command(flatten)]
        common: Common,
        /// Evaluate every admissible path instead of the guided search.
        #[arg(long)]
        brute_force: bool,
        /// Seed for the synthetic oracle.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare simulated and analytic throughput.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Path as lout,hin,hout,lin; host coordinates equal to n_f mark a skip path.
        #[arg(long)]
        path: Option<String>,
        #[arg(long, default_value_t = commands::DEFAULT_BATCHES)]
        batches: usize,
        #[arg(long, default_value_t = commands::DEFAULT_WARMUP)]
        warmup: usize,
    },
}

fn timeout_override(raw: Option<&str>) -> Result<Option<Duration>, CliError> {
    raw.map(|v| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .map(Duration::from_secs_f64)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{TIMEOUT_ENV}={v:?} is not a positive number of seconds"
                ))
            })
    })
    .transpose()
}

/// Runs one parsed command. `env_timeout` is the raw value of [`TIMEOUT_ENV`].
pub fn run(cli: Cli, env_timeout: Option<&str>) -> Result<Report, CliError> {
    let timeout = timeout_override(env_timeout)?;
    let (common, report) = match cli.command {
        Command::Enumerate { common, jobs } => {
            let loaded = load_scenario(&common.scenario)?;
            let report = commands::enumerate(
                &loaded,
                jobs.map(|j| {
                    if j == 0 {
                        rayon::current_num_threads()
                    } else {
                        j
                    }
                }),
            )?;
            std::fs::create_dir_all(&common.out).map_err(|source| CliError::Io {
                path: common.out.clone(),
                source,
            })?;
            report::write_json(
                &common.out.join("fixture_skeleton.json"),
                &commands::fixture_skeleton(&report),
            )?;
            (common, Report::Enumerate(report))
        }
        Command::Search {
            common,
            brute_force,
            seed,
        } => {
            let loaded = load_scenario(&common.scenario)?;
            let opts = commands::SearchOptions {
                brute_force,
                overrides: OracleOverrides { seed, timeout },
            };
            let report = commands::search(&loaded, opts)?;
            (common, Report::Search(report))
        }
        Command::Simulate {
            common,
            path,
            batches,
            warmup,
        } => {
            let loaded = load_scenario(&common.scenario)?;
            let path = path
                .map(|p| commands::parse_path(&p, loaded.scenario.n_f))
                .transpose()?;
            let report = commands::simulate(&loaded, path, batches, warmup)?;
            (common, Report::Simulate(report))
        }
    };
    report.write_to(&common.out)?;
    Ok(report)
}
