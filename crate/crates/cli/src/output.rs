//! Report envelope and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const REPORT_FILE: &str = "report.json";
pub const SERIES_FILE: &str = "series.csv";
pub const RASTER_DIR: &str = "rasters";

/// The exact statement checked and the numerical slack granted to it, kept
/// apart so a failure can be attributed to one or the other.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub check: String,
    /// Whether the statement holds with no slack at all.
    pub theory_holds: Option<bool>,
    /// Slack added on the discrete side, in the units of the check.
    pub tolerance: Option<f64>,
    pub tolerance_basis: Option<String>,
}

impl Verdict {
    /// `value ≤ limit` exactly and `value ≤ limit + tol` numerically.
    pub fn at_most(check: &str, value: f64, limit: f64, tol: f64, basis: &str) -> Self {
        Self {
            pass: value <= limit + tol,
            check: check.into(),
            theory_holds: Some(value <= limit),
            tolerance: Some(tol),
            tolerance_basis: Some(basis.into()),
        }
    }

    /// A check with no discretisation slack.
    pub fn exact(check: &str, holds: bool) -> Self {
        Self { pass: holds, check: check.into(), theory_holds: Some(holds), tolerance: None, tolerance_basis: None }
    }

    /// Nothing to decide; the run only produces data.
    pub fn none() -> Self {
        Self { pass: true, check: "none".into(), theory_holds: None, tolerance: None, tolerance_basis: None }
    }

    pub fn and(mut self, other: Verdict) -> Self {
        self.pass &= other.pass;
        self.check = format!("{} and {}", self.check, other.check);
        self.theory_holds = match (self.theory_holds, other.theory_holds) {
            (Some(a), Some(b)) => Some(a && b),
            (a, b) => a.or(b),
        };
        if self.tolerance.is_none() {
            self.tolerance = other.tolerance;
            self.tolerance_basis = other.tolerance_basis;
        }
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub started_unix_s: f64,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub inputs: Value,
    pub verdict: Verdict,
    pub results: Value,
    pub warnings: Vec<String>,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Output directory with `rasters/` created on demand.
pub struct Sink {
    root: PathBuf,
    artifacts: Vec<String>,
}

impl Sink {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of `name` inside `rasters/`, recorded as an artifact.
    pub fn raster_path(&mut self, name: &str) -> Result<PathBuf> {
        let dir = self.root.join(RASTER_DIR);
        fs::create_dir_all(&dir)?;
        self.artifacts.push(format!("{RASTER_DIR}/{name}"));
        Ok(dir.join(name))
    }

    pub fn series<R: Serialize>(&mut self, rows: &[R]) -> Result<()> {
        let path = self.root.join(SERIES_FILE);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.artifacts.push(SERIES_FILE.into());
        Ok(())
    }

    pub fn finish(mut self, mut report: Report) -> Result<Report> {
        self.artifacts.sort();
        report.artifacts = self.artifacts;
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(self.root.join(REPORT_FILE), text)?;
        Ok(report)
    }
}
