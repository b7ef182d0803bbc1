use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("degenerate secant pair: s'y = {sy:e}")]
    DegeneratePair { sy: f64 },

    #[error("not a descent direction: g'd = {gd:e}")]
    NonDescent { gd: f64 },

    #[error("zero displacement cannot form a secant pair")]
    ZeroStep,

    #[error("non-positive curvature d'Ad = {0:e} along the search direction")]
    NonPositiveCurvature(f64),

    #[error("eigenvalue radicand {0:e} is inconsistent with Cauchy-Schwarz")]
    SpectralInconsistency(f64),

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}
