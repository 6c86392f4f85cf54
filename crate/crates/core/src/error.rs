use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// The variants group into the CLI exit classes: bad arguments (1),
/// violated preconditions or constraints (2) and resource limits (3).
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("empty selection: {0}")]
    EmptySelection(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::InvalidArgument(_)
            | LabError::InvalidInput(_)
            | LabError::Format(_)
            | LabError::Json(_)
            | LabError::Io(_)
            | LabError::Csv(_) => 1,
            LabError::OutOfRange(_)
            | LabError::Precondition(_)
            | LabError::DegenerateParameters(_)
            | LabError::EmptySelection(_) => 2,
            LabError::ResourceLimit(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidArgument(msg.into()))
}
