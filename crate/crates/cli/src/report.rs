//! Structured run reports: one entry per check, overall status the AND of
//! all checks, serialized as JSON next to the run artifacts.

use crate::config::ExperimentConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: String,
    pub status: String,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            schema_version: crate::config::SCHEMA_VERSION,
            experiment: config.experiment.name().to_string(),
            status: "pass".into(),
            config,
            checks: Vec::new(),
            artifacts: Vec::new(),
        wall_time_s: 0.0,
        }
    }

    /// Record a check of the form measured <= tolerance.
    pub fn check_le(&mut self, name: &str, measured: f64, tolerance: f64, detail: &str) {
        let passed = measured <= tolerance;
        self.push(CheckResult {
            name: name.into(),
            passed,
            measured,
            tolerance,
            detail: detail.into(),
        });
    }

    /// Record a boolean check; `measured` is 1.0 when it holds.
    pub fn check_that(&mut self, name: &str, holds: bool, detail: &str) {
        self.push(CheckResult {
            name: name.into(),
            passed: holds,
            measured: if holds { 1.0 } else { 0.0 },
            tolerance: 1.0,
            detail: detail.into(),
        });
    }

    fn push(&mut self, check: CheckResult) {
        println!(
            "  [{}] {}: measured {:.6e} vs tolerance {:.2e} {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.measured,
            check.tolerance,
            check.detail
        );
        if !check.passed {
            self.status = "fail".into();
        }
        self.checks.push(check);
    }

    pub fn add_artifact(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }

    pub fn all_passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, self).map_err(std::io::Error::other)
    }
}
