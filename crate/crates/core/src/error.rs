use thiserror::Error;

/// Errors raised by model construction, kernels and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A standing assumption on the model or cost is violated.
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Evaluation requested at a pole or outside the domain of definition.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("root search failed: {0}")]
    RootSearch(String),
    /// A bracket expansion ran into its configured ceiling.
    #[error("search ceiling reached: {0}")]
    Ceiling(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
