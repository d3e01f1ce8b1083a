//! Pass/fail records shared by the verification suites.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes when `residual ≤ tolerance`; NaN fails.
    pub fn within(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, residual, tolerance, note: None }
    }

    pub fn skipped(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Skipped, residual: 0.0, tolerance: 0.0, note: Some(note.into()) }
    }

    /// A reported number that is not asserted.
    pub fn info(name: impl Into<String>, value: f64, note: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Pass, residual: value, tolerance: f64::INFINITY, note: Some(note.into()) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self { suite: suite.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: SuiteReport) {
        let prefix = other.suite;
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}: {}", c.name);
            c
        }));
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Largest residual among checks whose name contains `pattern`.
    pub fn worst(&self, pattern: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name.contains(pattern) && c.status != Status::Skipped)
            .map(|c| c.residual)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "suite": self.suite,
            "checks": self.checks.iter().map(|c| {
                let mut v = serde_json::json!({
                    "name": c.name,
                    "status": c.status,
                    "residual": json_number(c.residual),
                    "tolerance": json_number(c.tolerance),
                });
                if let Some(n) = &c.note {
                    v["note"] = serde_json::Value::String(n.clone());
                }
                v
            }).collect::<Vec<_>>(),
        })
    }
}

fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::String(format!("{x}"))
    }
}
