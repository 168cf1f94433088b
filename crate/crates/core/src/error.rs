use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sorted access exhausted: all {0} items already returned")]
    Exhausted(usize),
    #[error("item {item} out of range [1, {m}]")]
    OutOfRange { item: usize, m: usize },
    #[error("expected {expected} items, got {actual}")]
    BadCardinality { expected: usize, actual: usize },
    #[error("k = {k} outside [1, {m}]")]
    BadK { k: usize, m: usize },
    #[error("value {0} outside the open interval (0, 1)")]
    Domain(f64),
    #[error("beta shape parameters must be >= 1 (got {alpha}, {beta})")]
    BadShape { alpha: f64, beta: f64 },
    #[error("order-statistic index {j} outside [1, {m}]")]
    BadIndex { j: usize, m: usize },
    #[error("position {0} already sampled")]
    AlreadySampled(usize),
    #[error("infeasible conditioning: {0}")]
    InfeasibleState(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("expected count {expected:.3} in cell {cell} is below 5")]
    SparseCells { cell: usize, expected: f64 },
    #[error("need at least {min} observations per sample, got {actual}")]
    TooFew { min: usize, actual: usize },
    #[error("rejection sampler acceptance rate {rate:e} below threshold after {attempts} attempts")]
    Timeout { attempts: u64, rate: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::BadParams(msg.into())
    }
}
