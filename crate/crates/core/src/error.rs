use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    #[error("{0}")]
    Invalid(String),
    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e} at column {column}")]
    Singular { column: usize, pivot: f64, threshold: f64 },
    #[error("sweep {sweep}, step {step}: {source}")]
    Step {
        sweep: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: &str) -> Self {
        Error::Invalid(msg.to_string())
    }
}
