//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A dimension argument was zero or otherwise unusable.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// A domain radius or partition argument was out of range.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Two containers that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Sets built over different dimensions or radii cannot be combined.
    #[error("incompatible domains: {0}")]
    IncompatibleDomain(String),

    /// A scalar parameter violated its constraint (positivity, range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that needs observations received none.
    #[error("empty data: {0}")]
    EmptyData(String),

    /// Every particle weight is zero (or -inf in log space).
    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    /// A run configuration failed validation before any compute started.
    #[error("configuration error: {0}")]
    Config(String),

    /// A prediction point fell outside every cell of a domain partition.
    #[error("point outside the partitioned domain: {0}")]
    OutOfDomain(String),

    /// CSV ingestion failed on a specific row.
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    /// A requested column does not exist in the input file.
    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
