//! Deterministic CSV and JSON artifact writers.
//!
//! Floats are printed with a fixed `{:.12e}` format so that re-running the
//! same configuration reproduces the output files byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CwlmError, Result};
use crate::model::ValidationReport;

use super::config::ScenarioConfig;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.12e}")
}

/// Write a CSV of named equal-length columns.
pub fn write_csv(path: &Path, columns: &[(String, &[f64])]) -> Result<()> {
    let n = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
    for (name, col) in columns {
        if col.len() != n {
            return Err(CwlmError::InvalidParameter(format!(
                "column {name} has length {} != {n}",
                col.len()
            )));
        }
    }
    let mut text = String::new();
    let header: Vec<&str> = columns.iter().map(|(name, _)| name.as_str()).collect();
    writeln!(text, "{}", header.join(",")).unwrap();
    for row in 0..n {
        let cells: Vec<String> = columns.iter().map(|(_, c)| fmt_float(c[row])).collect();
        writeln!(text, "{}", cells.join(",")).unwrap();
    }
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| CwlmError::InvalidParameter(format!("{}: {e}", path.display())))
}

/// Derived detector quantities echoed next to the raw configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedParams {
    pub gamma_per_us: f64,
    pub t_a_us: f64,
    pub quality_k: f64,
    /// (T, sigma(T)) for every requested window.
    pub sigma_by_t: Vec<(f64, f64)>,
}

/// Numerical quality record for one (window, selector) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityRecord {
    pub t_us: f64,
    pub selector: String,
    pub norm_residual: f64,
    pub imag_residual: f64,
    pub nonphysical: bool,
    pub degraded: bool,
}

/// JSON sidecar written next to every run's CSV files.
///
/// The `config` field is the exact input configuration; the sidecar itself is
/// accepted by `--config`, so any output directory can be re-run verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: ScenarioConfig,
    pub derived: DerivedParams,
    pub quality: Vec<QualityRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    pub files: Vec<String>,
    pub tool_version: String,
}

impl Sidecar {
    pub fn degraded(&self) -> bool {
        self.quality.iter().any(|q| q.degraded)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CwlmError::InvalidParameter(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }
}

/// File-name-safe rendering of a time value ("36.8" -> "36p8").
pub fn time_tag(t: f64) -> String {
    let mut s = format!("{t:.6}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    s.replace('.', "p").replace('-', "m")
}

pub fn csv_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.csv"))
}
