use thiserror::Error;

/// Errors raised by the simulator, kernel builders and performance models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot encode {value} as {format}")]
    Encoding { value: String, format: String },

    #[error("workload needs {needed} rows but the memory only has {available}")]
    WorkloadTooLarge { needed: u128, available: u64 },

    #[error("model definition error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
