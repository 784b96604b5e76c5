use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value produced in {context}")]
    NonFinite { context: &'static str },

    #[error("bound must be at least 1")]
    ZeroBound,

    #[error("group count {k} does not divide worker count {n}")]
    GroupSizeMismatch { n: usize, k: usize },

    #[error("group count {k} must be smaller than worker count {n}")]
    GroupCountTooLarge { n: usize, k: usize },

    #[error("slice index {s} out of range for {m} slices")]
    SliceIndexOutOfRange { s: usize, m: usize },

    #[error("ring group must not be empty")]
    EmptyGroup,

    #[error("total communication time is zero, idle proportion undefined")]
    ZeroTotalTime,

    #[error("initial loss {f_x0} is below the reported optimum {f_star}")]
    LossBelowOptimum { f_x0: f64, f_star: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
