//! Machine-readable check reports.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub operation: String,
    pub inputs: Value,
    pub value: Value,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Report {
    /// A report with no numeric check attached; it passes until told otherwise.
    pub fn new(operation: &str, inputs: impl Serialize, value: impl Serialize) -> Self {
        Self {
            operation: operation.to_string(),
            inputs: to_value(inputs),
            value: to_value(value),
            residual: None,
            tolerance: None,
            pass: true,
        }
    }

    /// Attach `residual ≤ tolerance` as the pass condition. NaN residuals fail.
    pub fn checked(mut self, residual: f64, tolerance: f64) -> Self {
        self.residual = Some(residual);
        self.tolerance = Some(tolerance);
        self.pass = residual <= tolerance;
        self
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite-or-null numbers and strings")
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_sets_pass() {
        let r = Report::new("area", serde_json::json!({"n": 2}), 1.0).checked(2e-5, 1e-4);
        assert!(r.pass);
        assert!(!Report::new("area", (), 1.0).checked(f64::NAN, 1e-4).pass);
        let text = r.to_json();
        for key in ["operation", "inputs", "value", "residual", "tolerance", "pass"] {
            assert!(text.contains(key), "{key}");
        }
    }
}
