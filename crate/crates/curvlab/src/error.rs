use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("structure constants violate {property} (deviation {deviation:e})")]
    InvalidAlgebra { property: &'static str, deviation: f64 },

    #[error("metric is not positive definite")]
    SingularMetric,

    #[error("internal consistency check failed in {context}: deviation {deviation:e} exceeds {tolerance:e}")]
    Consistency {
        context: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("frequency {requested} exceeds ambient cutoff {ambient}")]
    Truncation { requested: i64, ambient: i64 },

    #[error("Green's function diverges on the diagonal for 2s = {two_s} <= dim = {dim}")]
    DiagonalDivergence { two_s: f64, dim: usize },

    #[error("ill-conditioned configuration (condition number {0:e})")]
    IllConditioned(f64),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, CurvError>;
