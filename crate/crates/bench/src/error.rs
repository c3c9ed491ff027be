use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("reference data: {0}")]
    Reference(String),
    #[error(transparent)]
    Core(#[from] dpim_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.as_ref().display().to_string(), source }
    }
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const TOLERANCE: i32 = 1;
    pub const USAGE: i32 = 2;
}
