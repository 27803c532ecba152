use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} ({numerator}) is not divisible by {divisor}")]
    NotDivisible { what: &'static str, numerator: usize, divisor: usize },

    #[error("item index {item} out of range for {n} items")]
    ItemOutOfRange { item: usize, n: usize },

    #[error("outcome vector has length {got}, design has {expected} tests")]
    OutcomeLength { expected: usize, got: usize },

    #[error("no sign change of bound2 - bound3 on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("empty search range: {0}")]
    EmptySearchRange(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
