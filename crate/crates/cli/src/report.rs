//! Deterministic run reports: `report.json` holds everything reproducible,
//! `meta.json` the wall time. Identical configuration and seed produce
//! byte-identical reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "v1";

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    /// `None` for evidence-grade checks that do not pass or fail.
    pub passed: Option<bool>,
    pub details: Value,
}

impl Check {
    pub fn new(id: &str, passed: bool, details: impl Serialize) -> Self {
        Check {
            id: id.to_string(),
            passed: Some(passed),
            details: serde_json::to_value(details).unwrap_or(Value::Null),
        }
    }

    pub fn evidence(id: &str, details: impl Serialize) -> Self {
        Check {
            id: id.to_string(),
            passed: None,
            details: serde_json::to_value(details).unwrap_or(Value::Null),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub verdict: String,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Inconclusive => 0,
            Verdict::Fail => 2,
        }
    }
}

pub struct ReportBuilder {
    command: String,
    seed: u64,
    config: BTreeMap<String, String>,
    checks: Vec<Check>,
    artifacts: Vec<String>,
    out_dir: PathBuf,
}

impl ReportBuilder {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>, out_dir: &Path) -> Self {
        ReportBuilder {
            command: command.to_string(),
            seed,
            config,
            checks: Vec::new(),
            artifacts: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn push(&mut self, check: Check) {
        let line = match check.passed {
            Some(true) => format!("PASS  {}", check.id),
            Some(false) => format!("FAIL  {}", check.id),
            None => format!("INFO  {}", check.id),
        };
        println!("{line}");
        self.checks.push(check);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed.unwrap_or(true))
    }

    /// Write a CSV side file and record it as an artifact.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Write a JSON side file and record it as an artifact.
    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)?)
            .with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Finalize: write `report.json` (deterministic) and `meta.json`
    /// (wall time), print the verdict, and return the exit code.
    pub fn finish(self, verdict: Verdict, wall_seconds: f64) -> Result<i32> {
        fs::create_dir_all(&self.out_dir)?;
        let report = Report {
            schema: SCHEMA,
            command: self.command,
            seed: self.seed,
            config: self.config,
            checks: self.checks,
            verdict: verdict.label().to_string(),
            artifacts: self.artifacts,
        };
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(self.out_dir.join("report.json"), json.as_bytes())?;
        let meta = serde_json::json!({ "wall_time_seconds": wall_seconds });
        fs::write(
            self.out_dir.join("meta.json"),
            serde_json::to_string_pretty(&meta)?,
        )?;
        println!("verdict: {}", verdict.label());
        Ok(verdict.exit_code())
    }
}
