use std::fmt::Display;

use configlab::geometry::GeometryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), field.as_ref().map(|f| format!(" ({f})")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("unknown map: {0}")]
    UnknownMap(String),
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    /// A numerical precondition failed inside one of the analyses.
    #[error("{context}: {message}")]
    Numerical { context: String, message: String },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical preconditions, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::UnknownMap(_)
            | CliError::DimensionMismatch { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub(crate) fn from_geometry(e: GeometryError) -> Self {
        match e {
            GeometryError::UnknownMap(name) => CliError::UnknownMap(name),
            other => CliError::Parse {
                line: None,
                field: Some("map".into()),
                message: other.to_string(),
            },
        }
    }

    /// Wraps a core error as a numerical failure of `context`.
    pub(crate) fn numerical<E: Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
        move |e| CliError::Numerical {
            context: context.to_string(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
