//! Machine-readable suite reports.
//!
//! Field order in the structs is the key order in `report.json`; metric maps
//! are sorted, so a report is byte-stable for a fixed config apart from
//! `wall_time_s`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl Comparison {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
            Comparison::Above => value > threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// `null` in JSON when the computation failed.
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
    /// Non-gating checks are reported but do not affect the exit status.
    pub gating: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison,
            threshold,
            passed: comparison.holds(value, threshold),
            gating: true,
            note: None,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Comparison::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Comparison::AtLeast, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Comparison::Above, threshold)
    }

    /// A check whose computation failed.
    pub fn errored(name: impl Into<String>, comparison: Comparison, threshold: f64, err: impl std::fmt::Display) -> Self {
        Check::new(name, f64::NAN, comparison, threshold).with_note(format!("error: {err}"))
    }

    /// ANDs an extra condition into the verdict.
    pub fn require(mut self, ok: bool, why: &str) -> Self {
        if !ok {
            self.passed = false;
            self.note = Some(why.to_string());
        }
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn non_gating(mut self, note: impl Into<String>) -> Self {
        self.gating = false;
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub grading: String,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub n: usize,
}

impl GridInfo {
    pub fn of(grid: &hmt_core::RadialGrid) -> Self {
        let grading = match grid.grading() {
            Some(hmt_core::Grading::UniformT) => "uniform_t",
            Some(hmt_core::Grading::GeometricT) => "geometric_t",
            None => "explicit",
        };
        GridInfo { grading: grading.into(), t_max: grid.t_max(), n: grid.n() }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Provenance {
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grids: Vec<GridInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, serde_json::Value>,
}

impl Provenance {
    pub fn new() -> Self {
        Provenance { tool_version: env!("CARGO_PKG_VERSION"), ..Default::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    /// All gating checks passed.
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub provenance: Provenance,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.into(),
            passed: true,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            provenance: Provenance::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn finish(&mut self, secs: f64) {
        self.passed = self.checks.iter().all(|c| c.passed || !c.gating);
        self.wall_time_s = secs;
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// `report.json` for `hmtlab all`.
#[derive(Debug, Clone, Serialize)]
pub struct AllReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    pub wall_time_s: f64,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(|e| CliError::io(path, e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_and_gating() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::above("b", 1.0, 1.0).passed);
        assert!(!Check::at_least("c", f64::NAN, 0.0).passed);
        assert!(!Check::at_most("d", 0.0, 1.0).require(false, "why").passed);
        let mut r = SuiteReport::new("s");
        r.push(Check::at_most("ok", 0.0, 1.0));
        r.push(Check::at_most("soft", 2.0, 1.0).non_gating("known"));
        r.finish(0.0);
        assert!(r.passed);
        r.push(Check::at_most("hard", 2.0, 1.0));
        r.finish(0.0);
        assert!(!r.passed);
        assert_eq!(r.failed_checks().count(), 2);
    }

    #[test]
    fn json_keys_keep_declaration_order() {
        let mut r = SuiteReport::new("s");
        r.push(Check::errored("x", Comparison::AtMost, 1.0, "boom"));
        r.finish(0.5);
        let s = serde_json::to_string(&r).unwrap();
        let pos = |k: &str| s.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("suite") < pos("passed") && pos("passed") < pos("checks") && pos("checks") < pos("metrics"));
        assert!(pos("provenance") < pos("wall_time_s"));
        assert!(s.contains("\"value\":null"));
        assert!(s.contains("\"comparison\":\"<=\""));
    }
}
