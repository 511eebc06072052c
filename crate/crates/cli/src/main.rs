use std::process::ExitCode;

use clap::Parser;
use pathplan_cli::{run, Cli, TIMEOUT_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_timeout = std::env::var(TIMEOUT_ENV).ok();
    match run(cli, env_timeout.as_deref()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
