//! Command-line studies over the `iterint-core` engine.
//!
//! Each command resolves a [`RunConfig`] against its defaults, runs one study and writes
//! CSV tables plus a JSON summary into the output directory. Reports depend only on the
//! resolved configuration, never on the worker count or wall clock.

pub mod config;
pub mod report;
pub mod studies;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Command, FnSource, LevelRange, Resolved, RunConfig, THREADS_ENV};
pub use report::{Check, StudyOutput, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] iterint_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Exit status for an assertion failure.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for bad input: config, flags, off-grid times, unreadable files.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub struct Outcome {
    pub summary: PathBuf,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            EXIT_FAIL
        }
    }
}

/// Resolves, runs and writes one command.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let resolved = cfg.resolve(command)?;
    let output = match cfg.thread_count()? {
        Some(n) => iterint_core::mc::with_threads(n, || studies::run(&resolved))??,
        None => studies::run(&resolved)?,
    };
    let summary = report::write_reports(&cfg.out_dir(), &resolved, &output)?;
    Ok(Outcome {
        summary,
        checks: output.checks,
    })
}
