//! CSV tables and the JSON run record written beside them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

/// Rows under a fixed header. Floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

pub const SERIES_HEADER: &[&str] = &["time", "observable", "re", "im", "stderr"];
pub const PROFILE_HEADER: &[&str] = &["time", "site", "density"];
pub const RATES_HEADER: &[&str] = &["V", "n_high", "gamma_prime"];
pub const KERNEL_HEADER: &[&str] = &["x", "x_prime", "re", "im"];
pub const DAMPING_HEADER: &[&str] = &["r", "fitted_rate", "predicted_rate"];

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::F(x) => write!(out, "{x:.16e}").unwrap(),
                    Cell::I(n) => write!(out, "{n}").unwrap(),
                    Cell::S(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One named check: `value` compared against `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `"<="` or `">="`
    pub relation: &'static str,
    pub pass: bool,
}

impl InvariantCheck {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            relation: "<=",
            pass: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            relation: ">=",
            pass: value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub kind: String,
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
    pub duration_seconds: f64,
    pub csv: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub invariants: Vec<InvariantCheck>,
    pub summary: Value,
    pub parallel: bool,
    pub threads: usize,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&InvariantCheck> {
        self.invariants.iter().filter(|c| !c.pass).collect()
    }
}

/// SHA-256 of the compact JSON serialization (keys sorted).
pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

/// `out.csv` -> `out.run.json`
pub fn record_path(csv: &Path) -> PathBuf {
    csv.with_extension("run.json")
}

pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, table.to_csv()).map_err(|e| CliError::io(path, e))
}

pub fn write_record(path: &Path, record: &RunRecord) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(record).expect("record serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
