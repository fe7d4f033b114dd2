use thiserror::Error;

use crate::hierarchy::TaxonomyError;

pub type Result<T, E = BanditError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("arm id must be non-empty")]
    EmptyArmId,
    #[error("duplicate arm id `{0}`")]
    DuplicateArm(String),
    #[error("unknown arm `{0}`")]
    UnknownArm(String),
    #[error("arm pool is empty")]
    EmptyArmPool,
    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),
    #[error("plug-in noise variance undefined for alpha = {0} (requires alpha > 1)")]
    UndefinedPlugInVariance(f64),
    #[error("predictive variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("particle weights collapsed: every weight is zero")]
    WeightCollapse,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("covariance matrix is not positive semi-definite")]
    NotPsd,
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("particle set is empty")]
    EmptyParticleSet,
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("event log is empty")]
    EmptyLog,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BanditError {
    fn from(err: std::io::Error) -> Self {
        BanditError::Io(err.to_string())
    }
}
