//! CSV tables and the JSON run summary.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Floats are written with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    /// Skipped assertions count as passing.
    pub skipped: bool,
    pub detail: String,
}

impl Assertion {
    pub fn check(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            pass,
            skipped: false,
            detail: detail.into(),
        }
    }

    pub fn skip(name: &str, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            pass: true,
            skipped: true,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub rng_algorithm: &'static str,
    pub seed_mixing: &'static str,
    pub method: String,
    pub execution: String,
    pub spec_hashes: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub pass: bool,
    pub runtime_seconds: f64,
    /// Wall time per CSV row group, in row order.
    pub point_runtimes_seconds: Vec<f64>,
}

/// A finished command: CSV header and rows plus the summary.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.summary).map_err(|e| Error::Io(e.to_string()))
    }

    /// Writes `<out>/<command>.csv` and `<out>/summary.json`.
    pub fn write(&self, out: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", out.display()));
        fs::create_dir_all(out).map_err(io)?;
        fs::write(out.join(format!("{}.csv", self.command)), self.csv_string()?).map_err(io)?;
        let mut json = self.summary_json()?;
        json.push('\n');
        fs::write(out.join("summary.json"), json).map_err(io)?;
        Ok(())
    }
}
