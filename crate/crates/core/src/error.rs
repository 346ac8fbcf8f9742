use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlpError {
    #[error("distribution support is empty")]
    EmptySupport,
    #[error("distribution weight {0} is not positive")]
    NonPositiveWeight(String),
    #[error("distribution weights sum to {0}, not 1")]
    WeightsDoNotSumToOne(String),
    #[error("support point {0} appears more than once")]
    DuplicateSupportPoint(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("exact proportion is intractable: {0}")]
    IntractableExactProportion(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("enumeration exceeds budget of {budget} candidates")]
    BudgetExceeded { budget: u64 },
    #[error("hypothesis class is infinite or not enumerable: {0}")]
    InfiniteClass(String),
    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),
    #[error("malformed hypothesis: {0}")]
    MalformedHypothesis(String),
    #[error("malformed sample: {0}")]
    MalformedSample(String),
    #[error("target count {target} cannot be reached after {attempts} projection draws")]
    UnreachableCount { target: u64, attempts: u32 },
    #[error("projection collision persisted after {attempts} draws")]
    CollisionPersistent { attempts: u32 },
    #[error("noise bound must satisfy 0 <= eta' < 1/2, got {0}")]
    InvalidNoiseBound(String),
    #[error("gap between achievable proportions is zero")]
    ZeroGap,
    #[error("oracle rejected the query")]
    OracleReject,
    #[error("labeled sample is empty")]
    DegenerateSample,
    #[error("no oracle candidate passed the disagreement test")]
    NoCandidateAccepted,
    #[error("auxiliary count {ell} must exceed universe size {universe}")]
    InvalidEll { ell: usize, universe: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("JSON error: {0}")]
    Json(String),
}

impl LlpError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            LlpError::EmptySupport => "EmptySupport",
            LlpError::NonPositiveWeight(_) => "NonPositiveWeight",
            LlpError::WeightsDoNotSumToOne(_) => "WeightsDoNotSumToOne",
            LlpError::DuplicateSupportPoint(_) => "DuplicateSupportPoint",
            LlpError::DomainMismatch(_) => "DomainMismatch",
            LlpError::IntractableExactProportion(_) => "IntractableExactProportion",
            LlpError::InvalidParams(_) => "InvalidParams",
            LlpError::BudgetExceeded { .. } => "BudgetExceeded",
            LlpError::InfiniteClass(_) => "InfiniteClass",
            LlpError::MalformedEncoding(_) => "MalformedEncoding",
            LlpError::MalformedHypothesis(_) => "MalformedHypothesis",
            LlpError::MalformedSample(_) => "MalformedSample",
            LlpError::UnreachableCount { .. } => "UnreachableCount",
            LlpError::CollisionPersistent { .. } => "CollisionPersistent",
            LlpError::InvalidNoiseBound(_) => "InvalidNoiseBound",
            LlpError::ZeroGap => "ZeroGap",
            LlpError::OracleReject => "OracleReject",
            LlpError::DegenerateSample => "DegenerateSample",
            LlpError::NoCandidateAccepted => "NoCandidateAccepted",
            LlpError::InvalidEll { .. } => "InvalidEll",
            LlpError::InvalidInstance(_) => "InvalidInstance",
            LlpError::Io(_) => "IoError",
            LlpError::Json(_) => "JsonError",
        }
    }
}

impl From<std::io::Error> for LlpError {
    fn from(e: std::io::Error) -> Self {
        LlpError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LlpError {
    fn from(e: serde_json::Error) -> Self {
        LlpError::Json(e.to_string())
    }
}

pub type Result<T, E = LlpError> = std::result::Result<T, E>;
