use alloc::string::String;
use thiserror::Error;

/// Errors produced by the scoring pipeline and its verification tools.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("embedding matrix has no rows")]
    EmptyMatrix,

    #[error("embedding dimension {0} is below the minimum of 2")]
    DimensionTooSmall(usize),

    #[error("data length {len} does not equal rows x dim = {expected}")]
    RaggedData { len: usize, expected: usize },

    #[error("row {index} has norm {norm}, expected 1")]
    NonUnitRow { index: usize, norm: f64 },

    #[error("row {index} contains a non-finite value")]
    NonFiniteRow { index: usize },

    #[error("{labels} labels supplied for {rows} rows")]
    LabelCountMismatch { labels: usize, rows: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("alpha = {alpha} exceeds rows - 1 = {max}")]
    AlphaTooLarge { alpha: usize, max: usize },

    #[error("at least {needed} rows are required, got {rows}")]
    TooFewRows { rows: usize, needed: usize },

    #[error("requested top {top} rows from a corpus of {rows}")]
    LNotAvailable { top: usize, rows: usize },

    #[error("perturbed vector has zero norm after resampling")]
    ZeroNormResult,

    #[error("affinity list is empty")]
    EmptyAffinities,

    #[error("no wild label groups")]
    EmptyGroups,

    #[error("affinity {value} at ({row}, {col}) exceeds kappa = {kappa}")]
    AffinityOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        kappa: f64,
    },

    #[error("negative-label mean must be positive, got {0}")]
    NonPositiveMean(f64),

    #[error("method {0:?} cannot be computed from a scoring context")]
    UnsupportedMethod(crate::Method),

    #[error("enumeration over {labels} labels with r = {r} exceeds the exact-evaluation cap")]
    EnumerationTooLarge { labels: usize, r: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("mixture not realizable: derived negative weight {weight} at label {index}")]
    UnrealizableMixture { index: usize, weight: f64 },

    #[error("at least {min} trials are required, got {trials}")]
    InsufficientTrials { trials: usize, min: usize },

    #[error("sample-size grid is empty or contains a zero")]
    InvalidGrid,

    #[error("score list is empty")]
    EmptyScores,

    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),

    #[error("TPR target {0} is outside (0, 1]")]
    InvalidTpr(f64),

    #[error("cannot place anchors with cosine <= {separation} in dimension {dim}")]
    InfeasibleSeparation { dim: usize, separation: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
