use std::fmt;

use serde_json::json;

/// Exit status of a validation error.
pub const EXIT_USAGE: i32 = 2;
/// Exit status of a numerical-domain error.
pub const EXIT_NUMERIC: i32 = 3;

/// An error with its machine-readable code and exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub field: Option<String>,
    pub message: String,
    pub exit: i32,
}

impl Failure {
    pub fn usage(field: &str, message: impl Into<String>) -> Self {
        Self {
            code: "usage",
            field: Some(field.to_string()),
            message: message.into(),
            exit: EXIT_USAGE,
        }
    }

    /// A library error attributed to a config field.
    pub fn field(field: &str, e: bessel_calculus::Error) -> Self {
        Self {
            field: Some(field.to_string()),
            ..Self::from(e)
        }
    }

    pub fn with_hint(mut self, hint: &str) -> Self {
        self.message = format!("{} ({hint})", self.message);
        self
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self {
            code: "io",
            field: None,
            message: format!("{}: {e}", path.display()),
            exit: EXIT_USAGE,
        }
    }

    pub fn envelope(&self) -> serde_json::Value {
        json!({
            "schema": 1,
            "error": {
                "code": self.code,
                "field": self.field,
                "message": self.message,
                "exit": self.exit,
            }
        })
    }
}

impl From<bessel_calculus::Error> for Failure {
    fn from(e: bessel_calculus::Error) -> Self {
        Self {
            code: e.code(),
            field: None,
            message: e.to_string(),
            exit: if e.is_usage() { EXIT_USAGE } else { EXIT_NUMERIC },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}
