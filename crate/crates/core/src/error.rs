use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not self-adjoint (|A - A^H|_F = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("operator kind `{kind}` is randomized and requires a seed")]
    MissingSeed { kind: &'static str },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure is a single point mass; its density is singular")]
    SingularMeasure,

    #[error("log-energy of a point mass diverges")]
    Divergent,

    #[error("Cauchy transform requires Im z > 0, got {0}")]
    RealEvaluationPoint(Complex64),

    #[error("w = {w} is outside the inversion domain (residual {residual:e})")]
    OutsideInversionDomain { w: Complex64, residual: f64 },

    #[error("fixed-point solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{what} must not be empty")]
    Empty { what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("adjacent elements {index} and {} share the label `{label}`", index + 1)]
    NonAlternating { index: usize, label: String },

    #[error("block sizes {sizes:?} do not partition dimension {dim}")]
    InvalidPartition { sizes: Vec<usize>, dim: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("unknown token label `{0}`")]
    UnknownToken(String),

    #[error("at fold {index}: {source}")]
    AtFold { index: usize, source: Box<Error> },

    #[error("at layer {layer}: {source}")]
    AtLayer { layer: usize, source: Box<Error> },

    #[error("at index {index}: {source}")]
    AtIndex { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Strips positional wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFold { source, .. }
            | Error::AtLayer { source, .. }
            | Error::AtIndex { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn at_fold(self, index: usize) -> Error {
        Error::AtFold { index, source: Box::new(self) }
    }

    pub fn at_layer(self, layer: usize) -> Error {
        Error::AtLayer { layer, source: Box::new(self) }
    }

    pub fn at_index(self, index: usize) -> Error {
        Error::AtIndex { index, source: Box::new(self) }
    }

    /// Residual carried by a (possibly wrapped) convergence failure.
    pub fn residual(&self) -> Option<f64> {
        match self.root() {
            Error::NonConvergence { residual, .. } => Some(*residual),
            Error::OutsideInversionDomain { residual, .. } => Some(*residual),
            _ => None,
        }
    }
}
