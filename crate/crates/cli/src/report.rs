//! CSV tables and the JSON summary written by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Resolved;
use crate::CliError;

/// Version of the JSON summary layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "in")]
    Within,
}

/// One asserted comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub study: String,
    pub model: String,
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: Vec<f64>,
    pub pass: bool,
}

impl Check {
    pub fn below(study: &str, model: &str, name: &str, value: f64, limit: f64) -> Self {
        Self::make(study, model, name, value, Relation::Below, vec![limit], value < limit)
    }

    pub fn at_most(study: &str, model: &str, name: &str, value: f64, limit: f64) -> Self {
        Self::make(study, model, name, value, Relation::AtMost, vec![limit], value <= limit)
    }

    pub fn within(study: &str, model: &str, name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::make(study, model, name, value, Relation::Within, vec![lo, hi], lo <= value && value <= hi)
    }

    fn make(study: &str, model: &str, name: &str, value: f64, relation: Relation, limit: Vec<f64>, pass: bool) -> Self {
        Self {
            study: study.into(),
            model: model.into(),
            name: name.into(),
            value,
            relation,
            limit,
            pass,
        }
    }
}

/// A CSV file with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            file: file.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(&self.file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Float formatting shared by all CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// What a study hands back: tables, checks and free-form details for the summary.
#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub details: serde_json::Map<String, Value>,
}

impl StudyOutput {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Writes the tables and `<command>.json` into `dir`; returns the summary path.
pub fn write_reports(dir: &Path, resolved: &Resolved, out: &StudyOutput) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &out.tables {
        t.write(dir)?;
        files.push(t.file.clone());
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "iterint",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": resolved.command,
        "config_digest": resolved.digest(),
        "config": resolved,
        "seed": resolved.seed,
        "tolerances": tolerances(),
        "pass": out.pass(),
        "checks": out.checks,
        "details": out.details,
        "files": files,
    });
    let path = dir.join(format!("{}.json", resolved.command));
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn tolerances() -> Value {
    use iterint_core::tolerances::*;
    json!({
        "algebra": ALGEBRA,
        "regrade": REGRADE,
        "end_to_end": END_TO_END,
        "riemann_relative": RIEMANN_RELATIVE,
        "moment_ratio_spread": MOMENT_RATIO_SPREAD,
        "moment_slope": [MOMENT_SLOPE.0, MOMENT_SLOPE.1],
        "mc_sigmas": MC_SIGMAS,
        "undersampled_half_width": UNDERSAMPLED_HALF_WIDTH,
    })
}
