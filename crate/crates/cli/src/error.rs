use serde::Serialize;
use thiserror::Error;
use tikfar::error::FarError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Estimation(#[from] FarError),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error("verification failed: {}", .0.join(", "))]
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Estimation(e) => e.kind(),
            CliError::Config(_) => "config",
            CliError::File { .. } => "file",
            CliError::VerifyFailed(_) => "verify-failed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Estimation(FarError::InvalidArgument(_)) => 2,
            CliError::VerifyFailed(_) => 3,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            schema_version: crate::SCHEMA_VERSION,
            error: self.kind().to_string(),
            message: self.to_string(),
            failures: match self {
                CliError::VerifyFailed(names) => names.clone(),
                _ => Vec::new(),
            },
        }
    }

    pub(crate) fn file(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Machine-readable failure written to stderr as one JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub schema_version: u32,
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

pub type Result<T> = std::result::Result<T, CliError>;
