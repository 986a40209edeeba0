use thiserror::Error;

/// Errors raised by the simulator.
///
/// The variants map onto the CLI exit codes: `Config` is a schema or field
/// violation (exit 2), `Validity` is a physics-validity rejection (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("validity error: {0}")]
    Validity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource error: composite dimension {dim} exceeds ceiling {ceiling}")]
    Resource { dim: usize, ceiling: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration error at t = {time_s:.6e} s: {invariant} violated ({value:.3e})")]
    Integration {
        invariant: &'static str,
        time_s: f64,
        value: f64,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
