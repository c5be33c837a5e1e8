use thiserror::Error;

/// Errors raised by the generator, the clusterers and the feature extraction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rotation has an eigenvalue of -1; draw a new rotation")]
    ResampleRequired,

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("covariance of cluster {0} is not positive definite")]
    Materialization(usize),

    #[error("mean operator {operator} needs at least {needed} clusters, got {got}")]
    OperatorInapplicable {
        operator: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("individuals are incompatible: {0}")]
    Incompatible(String),

    #[error("silhouette width is undefined for a single cluster")]
    UndefinedSilhouette,

    #[error("individual {0} has not been evaluated")]
    StaleIndividual(usize),

    #[error("clusterer failed: {0}")]
    Clusterer(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
