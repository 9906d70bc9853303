use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate basis: Frobenius Gram matrix is singular (condition {condition:.3e})")]
    DegenerateBasis { condition: f64 },
    #[error("generators do not close under the bracket (expansion residual {residual:.3e})")]
    NotClosed { residual: f64 },
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("metric block constraint violated: {0}")]
    BlockConstraint(String),
    #[error("torus model: {0}")]
    Model(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GeomError>;
