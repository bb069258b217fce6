use thiserror::Error;

/// Errors raised by kernel evaluation, quadrature, solves and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("space dimension must be at least 3, got {0}")]
    Dimension(usize),

    #[error("expected {expected} coordinates, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("evaluation requires an interior point (x_n > 0), got x_n = {0}")]
    NotInterior(f64),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("kernel is singular at the requested point")]
    SingularPoint,

    #[error("index {index} outside the admissible range {min}..={max}")]
    Index { index: usize, min: usize, max: usize },

    #[error("unsupported derivative order: {0}")]
    DerivativeOrder(String),

    #[error("quadrature for {context} did not converge (estimate {value:e}, error {error:e})")]
    Quadrature {
        context: String,
        value: f64,
        error: f64,
    },

    #[error("evaluation time {t} exceeds the data horizon {horizon}")]
    Horizon { t: f64, horizon: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
