mod commands;
mod options;
mod output;

use std::process::ExitCode;

use clap::Parser;
use dro_core::DroError;

use options::{Cli, Options};

/// Error reported to the user with its exit code: 1 for input and
/// configuration problems, 2 for solver failures.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }

    pub fn io(message: String) -> Self {
        Failure { code: 1, message }
    }
}

impl From<DroError> for Failure {
    fn from(e: DroError) -> Self {
        Failure {
            code: if e.is_solver_failure() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let options = match &cli.config {
        Some(path) => cli.options.merged_over(&Options::load(path)?)?,
        None => cli.options.clone(),
    };
    if let Some(w) = options.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(Failure::config)?;
    }
    commands::dispatch(cli.command, &options)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
