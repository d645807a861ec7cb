use thiserror::Error;

/// Errors raised by the library.
///
/// Solver outcomes such as "no solution" or "timeout" are not errors; they
/// are reported through the solvers' outcome types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("instance is unsolvable: aircraft {aircraft} has no legal trajectory")]
    Unsolvable { aircraft: u32 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
