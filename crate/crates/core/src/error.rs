use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: need at least 2 subintervals, got {n}")]
    InvalidGrid { n: usize },

    #[error("singularity t = {t} is outside the open interval (0, 1)")]
    Domain { t: f64 },

    #[error("{what} is out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("singularity t = {t} collides with node x[{beta}] = {node} (tolerance {tol:e})")]
    NodeCollision {
        t: f64,
        beta: usize,
        node: f64,
        tol: f64,
    },

    #[error("invalid convolution window {window} (minimum {min})")]
    InvalidWindow { window: usize, min: usize },

    #[error("degenerate boundary system: Delta = {delta:e}")]
    DegenerateSystem { delta: f64 },

    #[error("singular dense system: scaled pivot {pivot:e} in column {column}")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("principal-value quadrature did not reach tolerance {tol:e} within {panels} panels (estimate {estimate:e})")]
    AccuracyFailure {
        tol: f64,
        panels: usize,
        estimate: f64,
    },

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("no analytic principal value available for '{id}'")]
    ReferenceUnavailable { id: String },

    #[error("unknown catalog function '{id}'")]
    UnknownFunction { id: String },
}
