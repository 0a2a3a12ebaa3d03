use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] isac_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("format: {0}")]
    Format(String),
    #[error("dataset too small: {found} samples, need at least {needed}")]
    DatasetTooSmall { found: usize, needed: usize },
    #[error("no trajectory point produced a converged design")]
    EmptyDataset,
}

impl SimError {
    /// Short stable identifier for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Core(_) => "core",
            SimError::Io(_) => "io",
            SimError::Json(_) => "json",
            SimError::Csv(_) => "csv",
            SimError::Format(_) => "format",
            SimError::DatasetTooSmall { .. } => "dataset_too_small",
            SimError::EmptyDataset => "empty_dataset",
        }
    }
}
