use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular configuration: bond length {0:e} is below the regularity threshold")]
    SingularConfiguration(f64),

    #[error("non-finite energy (atom collision)")]
    NonFinite,

    #[error("assumption {name} violated: {detail}")]
    Assumption { name: &'static str, detail: String },

    #[error("invalid gamma surface: value {value:e} at t = {at}")]
    NegativeGamma { value: f64, at: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("line search failed at Newton iteration {iteration} (residual {residual:e})")]
    LineSearch { iteration: usize, residual: f64 },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
