use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] povmwalk::Error),

    /// A walk-backend or `compile` failure; carries the compiler diagnostic.
    #[error("compilation failed: {0}")]
    Compile(#[source] povmwalk::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed document: {0}")]
    Format(String),

    /// Row-level problem in an ingested data file (1-based record index).
    #[error("record {row}: {message}")]
    Data { row: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit code: 1 for IO, 2 for validation, 3 for compile failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Io(_) => 1,
            LabError::Json(e) if e.is_io() => 1,
            LabError::Csv(e) if e.is_io_error() => 1,
            LabError::Compile(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
