use std::path::PathBuf;

pub type Result<T, E = AgencyError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AgencyError {
    /// Bad flags, bad or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: {reason}")]
    Row { path: PathBuf, row: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Core(#[from] agency_core::Error),
    #[error("{0}")]
    Failed(String),
}

impl AgencyError {
    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            AgencyError::Config(_) | AgencyError::MissingColumn { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AgencyError {
        let path = path.into();
        move |source| AgencyError::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> AgencyError {
        let path = path.into();
        move |source| AgencyError::Csv { path, source }
    }
}
