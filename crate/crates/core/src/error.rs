use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid series: {0}")]
    Series(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("weight vector has no nonzero entry")]
    ZeroWeights,

    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),

    #[error("max lag {max_lag} must be below series length {len}")]
    LagTooLarge { max_lag: usize, len: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn series(msg: impl Into<String>) -> Self {
        Error::Series(msg.into())
    }
}
