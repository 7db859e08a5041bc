use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of a single verification check.
///
/// Serializes as `{check, pass, worst_value, location, params}`. A report whose
/// precondition was not met is never a pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    pub worst_value: f64,
    pub location: Option<String>,
    pub params: Value,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub precondition_met: bool,
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl CheckReport {
    pub fn new(check: impl Into<String>, pass: bool, worst_value: f64) -> Self {
        CheckReport {
            check: check.into(),
            pass,
            worst_value,
            location: None,
            params: Value::Object(Default::default()),
            precondition_met: true,
        }
    }

    pub fn with_location(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn precondition_unmet(check: impl Into<String>, reason: impl Into<String>) -> Self {
        CheckReport {
            check: check.into(),
            pass: false,
            worst_value: f64::NAN,
            location: Some(format!("precondition unmet: {}", reason.into())),
            params: Value::Object(Default::default()),
            precondition_met: false,
        }
    }
}
