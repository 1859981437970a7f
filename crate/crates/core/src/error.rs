use thiserror::Error;

#[derive(Debug, Error)]
pub enum JumpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need {needed} observations, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("numerical failure: {0}")]
    NumericFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("flat session: intraday path has zero total variation")]
    FlaggedFlat,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, JumpError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(JumpError::InvalidArgument(msg.into()))
}
