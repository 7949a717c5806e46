use thiserror::Error;

/// Error classes shared by every module. The CLI maps each class to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical blow-up at step {step} (t = {t}): {message}")]
    Numerical { step: usize, t: f64, message: String },

    #[error("mass drift {drift:e} exceeds budget {budget:e} at step {step}")]
    MassDrift { step: usize, drift: f64, budget: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("iteration did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }

    /// Process exit code for this error class: config/usage = 2, numerical = 3, resource = 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Usage(_) | Error::Json(_) => 2,
            Error::Numerical { .. }
            | Error::MassDrift { .. }
            | Error::NonConvergence { .. }
            | Error::InsufficientData(_) => 3,
            Error::Resource(_) => 4,
            Error::Io(_) => 1,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Usage(_) => "usage",
            Error::Numerical { .. } => "numerical",
            Error::MassDrift { .. } => "mass-drift",
            Error::Resource(_) => "resource",
            Error::NonConvergence { .. } => "non-convergence",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
