use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("assumption `{condition}` violated: {detail}")]
    Validation {
        condition: &'static str,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("singular flux evaluation: {0}")]
    Singularity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time step failed at t = {t}: {reason} (residual trace {trace:?})")]
    StepFailure {
        t: f64,
        reason: String,
        trace: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
