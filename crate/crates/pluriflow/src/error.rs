use std::path::PathBuf;

use serde::Serialize;

/// Failure of a scenario run, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Configuration or data rejected before solving (exit 2).
    #[error("invalid scenario: {0}")]
    Schema(String),
    /// Data violating its declared hypotheses (exit 2).
    #[error("data violation: {0}")]
    Data(pluriflow_core::Error),
    /// The solver or a transform failed (exit 3).
    #[error("solver failure: {0}")]
    Solver(pluriflow_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) | RunError::Data(_) | RunError::Json(_) => 2,
            RunError::Solver(_) | RunError::Io { .. } | RunError::Csv(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RunError {
        let path = path.into();
        move |source| RunError::Io { path, source }
    }

    /// Machine-readable form written next to the outputs.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            exit_code: i32,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            sample: Option<serde_json::Value>,
        }
        let kind = match self {
            RunError::Schema(_) => "schema",
            RunError::Data(_) => "data",
            RunError::Solver(_) => "solver",
            RunError::Io { .. } => "io",
            RunError::Json(_) => "json",
            RunError::Csv(_) => "csv",
        };
        let sample = match self {
            RunError::Data(pluriflow_core::Error::DataViolation {
                what,
                t,
                point,
                observed,
                bound,
            }) => Some(serde_json::json!({
                "what": what, "t": t, "point": point, "observed": observed, "bound": bound
            })),
            RunError::Data(pluriflow_core::Error::NegativeDensity { node, value }) => {
                Some(serde_json::json!({ "node": node, "value": value }))
            }
            _ => None,
        };
        serde_json::to_value(Body {
            kind,
            exit_code: self.exit_code(),
            message: self.to_string(),
            sample,
        })
        .expect("error body serializes")
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;
