//! Report records shared by the experiment suites and the CLI: every
//! asserted inequality carries both sides and the tolerance it was judged
//! against, and failures are findings, not process errors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Measured value.
    pub lhs: f64,
    /// Bound it is compared against.
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl CheckRecord {
    /// `lhs <= rhs` within nothing extra; tolerance recorded for the reader.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        CheckRecord { name: name.into(), lhs, rhs, tolerance: rhs, pass: lhs <= rhs, flag: None }
    }

    /// `|lhs - rhs| <= tolerance`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            lhs,
            rhs,
            tolerance,
            pass: (lhs - rhs).abs() <= tolerance,
            flag: None,
        }
    }

    /// Exact integer equality reported through floats.
    pub fn exact_int(name: impl Into<String>, lhs: i64, rhs: i64) -> Self {
        CheckRecord {
            name: name.into(),
            lhs: lhs as f64,
            rhs: rhs as f64,
            tolerance: 0.0,
            pass: lhs == rhs,
            flag: None,
        }
    }

    pub fn boolean(name: impl Into<String>, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            lhs: if pass { 1.0 } else { 0.0 },
            rhs: 1.0,
            tolerance: 0.0,
            pass,
            flag: None,
        }
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flag = Some(flag.into());
        self
    }
}

/// One exported curve: named columns and rows of numbers with an optional
/// flag column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveRecord {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub flags: Vec<Option<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub name: String,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveRecord>,
    /// Process error (not an assertion failure) that aborted the experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExperimentRecord {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentRecord { name: name.into(), checks: Vec::new(), curves: Vec::new(), error: None }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub scenario_name: String,
    pub seed: u64,
    pub versions: Versions,
    pub experiments: Vec<ExperimentRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<std::collections::BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub crate_version: String,
    pub report_schema: u32,
}

impl Versions {
    pub fn current() -> Self {
        Versions { crate_version: env!("CARGO_PKG_VERSION").to_string(), report_schema: 1 }
    }
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.experiments.iter().all(|e| e.passed())
    }
}
