use thiserror::Error;

/// Errors produced by the solvers, fits and file readers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid layer stack ({rule}): {detail}")]
    InvalidStack { rule: &'static str, detail: String },

    #[error("no guided mode: {0}")]
    NoGuidedMode(String),

    #[error("bisection on n_eff in [{lo}, {hi}] did not converge (residual {residual:e})")]
    RootNotConverged { lo: f64, hi: f64, residual: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular system: zero pivot at row {0}")]
    SingularPivot(usize),

    #[error("fit is unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("model evaluation failed at thickness {thickness_nm} nm: {source}")]
    ModelFailure {
        thickness_nm: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Data { line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
