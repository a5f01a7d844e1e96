use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("scenario parse error: {message}")]
    Parse { message: String, line: Option<usize>, column: Option<usize> },

    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical divergence in run {run} at step {step}")]
    Diverged { run: usize, step: usize, last_finite: Vec<f64> },

    #[error(transparent)]
    Core(#[from] smgame_core::Error),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } => 2,
            CliError::Diverged { .. } => 3,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }

    /// Single-line JSON error report.
    pub fn to_json(&self) -> String {
        let mut report = json!({ "exit_code": self.exit_code(), "message": self.to_string() });
        let extra = match self {
            CliError::Parse { line, column, .. } => json!({ "kind": "parse", "line": line, "column": column }),
            CliError::Invalid { field, .. } => json!({ "kind": "invalid", "field": field }),
            CliError::Io { path, .. } => json!({ "kind": "io", "path": path }),
            CliError::Diverged { run, step, last_finite } => {
                json!({ "kind": "divergence", "run": run, "step": step, "last_finite": last_finite })
            }
            CliError::Core(_) => json!({ "kind": "numeric" }),
        };
        if let (Some(a), Some(b)) = (report.as_object_mut(), extra.as_object()) {
            a.extend(b.clone());
        }
        report.to_string()
    }
}
