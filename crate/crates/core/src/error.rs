use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("normalization diverges: {0}")]
    NormalizationDivergent(String),

    #[error("index {index} lies beyond the generated depth {limit}")]
    DepthExceeded { index: u64, limit: u64 },

    #[error("base distribution is not strictly decreasing: {0}")]
    InvalidBase(String),

    #[error("{requested} stages requested, at most {max} supported")]
    StagesExceeded { requested: u32, max: u32 },

    #[error("distribution has finite support")]
    FiniteSupport,

    #[error("schedule too short: {0}")]
    ScheduleTooShort(String),

    #[error("v = {v} outside [1, n-1] for n = {n}")]
    InvalidV { v: u64, n: u64 },

    #[error("exhaustive enumeration too large: {0}")]
    TooLarge(String),

    #[error("cannot parse family spec `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("no theorem covers this family: {0}")]
    NoAnalyticRule(String),

    #[error("truncation budget exhausted after {terms} terms (bracket width {width:e})")]
    TruncationBudget { terms: u64, width: f64 },
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}
