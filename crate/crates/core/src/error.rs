use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("observation lies outside the bounded sample space")]
    OutOfSupport,
    #[error("sample space has {size} elements, above the enumeration cap of {cap}")]
    SpaceTooLarge { size: f64, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid auxiliary variable: {0}")]
    InvalidAux(String),
    #[error("graph is not binary")]
    NonBinaryGraph,
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexMismatch(usize, usize),
    #[error("normalised distance undefined for two empty multisets")]
    BothEmpty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unmapped venue categories: {}", .0.join(", "))]
    UnmappedCategories(Vec<String>),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
