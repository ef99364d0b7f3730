use thiserror::Error;

/// Failure modes of the testing pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),
    #[error("invalid sample design: {0}")]
    InvalidDesign(String),
    #[error("invalid block rule: {0}")]
    InvalidBlockRule(String),
    #[error("block count {0} is below the minimum of 3")]
    InvalidBlockCount(usize),
    #[error("invalid loss series: {0}")]
    InvalidSeries(String),
    #[error("invalid loss function: {0}")]
    InvalidLoss(String),
    #[error("unknown DGP family `{0}`")]
    UnknownFamily(String),
    #[error("invalid DGP parameters: {0}")]
    InvalidDgp(String),
    #[error("drift exponent {0} outside [0, 1/8)")]
    InvalidTheta(f64),
    #[error("singular regressor design for forecast origin {origin}")]
    SingularDesign { origin: usize },
    #[error("degenerate long-run variance estimate")]
    DegenerateVariance,
    #[error("near-zero loss-level denominator at index {index}")]
    ZeroDenominator { index: usize },
    #[error("zero within-block loss variance at index {index}")]
    ZeroWithinBlockVariance { index: usize },
    #[error("variance scale must be strictly positive")]
    NonpositiveVariance,
    #[error("variance estimate is zero: {0}")]
    ZeroVariance(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },
    #[error("{failed} of {total} replications failed for {statistic}")]
    TooManyFailures { statistic: String, failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
