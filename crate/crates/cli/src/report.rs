use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// `|value − reference| ≤ tol`.
    Within,
    /// `value ≤ tol`.
    AtMost,
    /// `value ≥ tol`.
    AtLeast,
}

/// One numeric claim together with the tolerance it was judged against.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub bound: Bound,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        let passed = (value - reference).abs() <= tol;
        Self { name: name.into(), value, reference: Some(reference), bound: Bound::Within, tol, passed }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, reference: None, bound: Bound::AtMost, tol, passed: value <= tol }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, reference: None, bound: Bound::AtLeast, tol, passed: value >= tol }
    }

    /// A yes/no claim (verdicts, certificates).
    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        let v = if passed { 1.0 } else { 0.0 };
        Self { name: name.into(), value: v, reference: Some(1.0), bound: Bound::Within, tol: 0.0, passed }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub argv: Vec<String>,
    /// SHA-256 of the configuration text.
    pub config_hash: String,
    pub config_source: String,
    pub stages: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, config_hash: String, config_source: String) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            config_hash,
            config_source,
            stages: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
            timings: BTreeMap::new(),
        }
    }

    pub fn stage(&mut self, name: &str, value: impl Serialize) {
        self.stages.insert(name.to_string(), serde_json::to_value(value).expect("stage serializes"));
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(name.to_string()).or_default() += start.elapsed().as_secs_f64();
        out
    }

    pub fn finish(&mut self) -> bool {
        self.passed = self.checks.iter().all(|c| c.passed);
        self.passed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}
