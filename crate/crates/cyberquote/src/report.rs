//! Shared reporting vocabulary: non-fatal findings attached to results.

use serde::{Deserialize, Serialize};

/// A non-fatal finding produced while evaluating a model, assessment, or
/// quote. Strict mode may upgrade specific codes to hard failures at the
/// CLI boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

impl Warning {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Warning {
            code: code.to_string(),
            message: message.into(),
        }
    }
}
