//! Output bundle: result files, `checks.json` and `manifest.json` in one
//! run directory.

use std::fs;
use std::path::{Path, PathBuf};

use ep_transonic::BranchPoint;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, status: Status, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status, value: None, limit: None, detail: detail.into() }
    }

    /// PASS iff `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        let status = if value < limit { Status::Pass } else { Status::Fail };
        Self { value: Some(value), limit: Some(limit), ..Self::new(name, status, format!("{value:e} vs {limit:e}")) }
    }

    /// WARN instead of FAIL when `value >= limit`.
    pub fn below_or_warn(name: &str, value: f64, limit: f64) -> Self {
        let mut c = Self::below(name, value, limit);
        if c.status == Status::Fail {
            c.status = Status::Warn;
        }
        c
    }

    pub fn holds(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }

    pub fn advisory(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Warn }, detail)
    }

    pub fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, Status::Fail, err.to_string())
    }

    pub fn warn(name: &str, detail: impl Into<String>) -> Self {
        Self::new(name, Status::Warn, detail)
    }
}

#[derive(Debug, Default, Serialize)]
struct Summary {
    pass: usize,
    warn: usize,
    fail: usize,
}

#[derive(Serialize)]
struct ChecksFile<'a> {
    schema_version: u32,
    experiment: &'a str,
    summary: Summary,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    formats: &'a [Format],
    files: &'a [String],
    config: &'a RunConfig,
}

/// Floats in CSV files: 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,n,E,regime` rows.
pub fn branch_rows(points: &[BranchPoint]) -> Vec<Vec<String>> {
    points.iter().map(|p| vec![num(p.x), num(p.n), num(p.e), p.regime.label().to_string()]).collect()
}

pub const BRANCH_HEADER: [&str; 4] = ["x", "n", "E", "regime"];

pub struct Bundle {
    dir: PathBuf,
    experiment: &'static str,
    formats: Vec<Format>,
    files: Vec<String>,
    checks: Vec<Check>,
}

impl Bundle {
    pub fn create(dir: &Path, experiment: &'static str, formats: Vec<Format>) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), experiment, formats, files: Vec::new(), checks: Vec::new() })
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| CliError::Io { path, source })
    }

    /// Write `checks.json` and `manifest.json`; returns the exit code.
    pub fn finish(mut self, config: &RunConfig) -> Result<u8, CliError> {
        let mut summary = Summary::default();
        for c in &self.checks {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Warn => summary.warn += 1,
                Status::Fail => summary.fail += 1,
            }
        }
        let checks = std::mem::take(&mut self.checks);
        let failed = summary.fail > 0;
        let file = ChecksFile { schema_version: SCHEMA_VERSION, experiment: self.experiment, summary, checks: &checks };
        self.write_json("checks.json", &file)?;
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        files.sort();
        let formats = self.formats.clone();
        let mut cfg = config.clone();
        cfg.run.formats = Some(formats.clone());
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            experiment: self.experiment,
            formats: &formats,
            files: &files,
            config: &cfg,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(if failed { 3 } else { 0 })
    }
}
