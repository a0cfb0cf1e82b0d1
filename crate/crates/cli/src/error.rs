use std::path::PathBuf;

use vizlab_core::analytics::AnalyticsError;
use vizlab_core::catalog::CatalogError;
use vizlab_core::field::FieldError;
use vizlab_core::ingest::IngestError;
use vizlab_core::scene::SceneError;
use vizlab_core::telemetry::TelemetryError;
use vizlab_core::templates::TemplateError;

/// Process exit codes.
pub mod exit {
    pub const FAILURE: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const UNSUPPORTED_MODE: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown dataset '{0}'")]
    UnknownDataset(String),
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("{0}")]
    Other(String),
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        CliError::Profile(e.to_string())
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Whether the error stems from the request rather than from execution.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            CliError::Profile(_)
                | CliError::InvalidArgument(_)
                | CliError::UnknownDataset(_)
                | CliError::Ingest(IngestError::InvalidId(_))
                | CliError::Analytics(_)
        )
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnsupportedMode(_) => exit::UNSUPPORTED_MODE,
            e if e.is_invalid_input() => exit::INVALID_INPUT,
            _ => exit::FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
