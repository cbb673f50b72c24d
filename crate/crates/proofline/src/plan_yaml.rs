//! `plan.yaml`: the decomposer's plan file.
//!
//! ```yaml
//! steps:
//!   - id: A
//!     statement: "For all x in [0,1], f(x) <= 2 x."
//!     depends_on: []
//!     difficulty: easy        # easy | medium | hard
//!     key_step: false
//! sources:
//!   - title: "..."
//!     authors: "..."
//!     url: "https://..."      # optional
//!     location: "Theorem 2.1"
//! self_critique: |
//!   ...
//! ```
//!
//! Unknown keys anywhere are rejected.

use proofline_core::DecompositionPlan;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanParseError {
    #[error("plan syntax error: {0}")]
    Syntax(String),
    #[error("plan is missing `{0}`")]
    MissingField(String),
    #[error("plan has unknown key `{0}`")]
    UnknownField(String),
    #[error("invalid value at `{path}`: {message}")]
    InvalidValue { path: String, message: String },
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() || path == "." {
        field.to_string()
    } else {
        format!("{path}.{field}")
    }
}

fn backticked(message: &str, prefix: &str) -> Option<String> {
    let rest = &message[message.find(prefix)? + prefix.len()..];
    Some(rest[..rest.find('`')?].to_string())
}

/// Classifies a serde error into missing/unknown field errors with full key paths.
pub(crate) fn classify<E: std::fmt::Display>(path: &str, err: &E) -> (Option<String>, Option<String>, String) {
    let message = err.to_string();
    let missing = backticked(&message, "missing field `").map(|f| join(path, &f));
    let unknown = backticked(&message, "unknown field `").map(|f| {
        // The path of an unknown-field error already ends at the field.
        if path == f || path.ends_with(&format!(".{f}")) {
            path.to_string()
        } else {
            join(path, &f)
        }
    });
    (missing, unknown, message)
}

pub fn parse_plan(raw: &str) -> Result<DecompositionPlan, PlanParseError> {
    serde_yaml::from_str::<serde_yaml::Value>(raw).map_err(|e| PlanParseError::Syntax(e.to_string()))?;
    let deserializer = serde_yaml::Deserializer::from_str(raw);
    serde_path_to_error::deserialize(deserializer).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match classify(&path, &inner) {
            (Some(missing), _, _) => PlanParseError::MissingField(missing),
            (_, Some(unknown), _) => PlanParseError::UnknownField(unknown),
            (None, None, message) if path.is_empty() || path == "." => PlanParseError::Syntax(message),
            (None, None, message) => PlanParseError::InvalidValue { path, message },
        }
    })
}

pub fn plan_to_yaml(plan: &DecompositionPlan) -> String {
    serde_yaml::to_string(plan).expect("plan serialises")
}
