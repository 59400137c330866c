use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{context}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("{0}: non-finite entry")]
    NonFinite(&'static str),
    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("{what} has invalid normalization ({value})")]
    NotNormalized { what: &'static str, value: f64 },
    #[error("state has zero trace")]
    ZeroTrace,
    #[error("bad subsystem partition: {0}")]
    BadPartition(String),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("integration invariant violated at t = {time}: {detail}")]
    Integration { time: f64, detail: String },
    #[error("solver failed ({status}) in {context}")]
    Solver { context: String, status: String },
}

impl Error {
    /// True for errors raised by a numerical solver rather than by input
    /// validation.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Solver { .. } | Error::Integration { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
