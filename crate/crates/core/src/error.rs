use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("field order {p}^{k} exceeds 2^20")]
    Overflow { p: u64, k: u32 },
    #[error("division by zero in GF({0})")]
    DivisionByZero(u64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("column {column} is linearly dependent on previous columns (pivot {pivot:.3e})")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("constructed bases are not mutually unbiased (max deviation {0:.3e})")]
    UnbiasednessCheckFailed(f64),
    #[error("bases are not mutually unbiased (overlap magnitude off by {0:.3e})")]
    NotUnbiased(f64),
    #[error("basis {index} is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { index: usize, deviation: f64 },
    #[error("invalid request weights: {0}")]
    WeightError(String),
    #[error("word budget exceeded: d={d}, n={n}")]
    BudgetExceeded { d: usize, n: usize },
    #[error("no sign change of the stationary condition on [-pi, pi)")]
    RootNotFound,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
