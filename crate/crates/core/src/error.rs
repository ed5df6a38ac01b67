use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector dimension must be at least 1")]
    EmptyVector,

    #[error("entry {index} is not finite")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("DFT power must be in 0..=3, got {0}")]
    InvalidPower(u32),

    #[error("eigenvalue class must be in 0..=3, got {0}")]
    InvalidClass(u8),

    #[error("tolerances must lie in (0, 1e-6], got zero_tol={zero_tol}, residual_tol={residual_tol}")]
    InvalidTolerance { zero_tol: f64, residual_tol: f64 },

    #[error("stride {d1} does not divide n={n}")]
    InvalidStride { n: usize, d1: usize },

    #[error("n must be at least {min}, got {n}")]
    InvalidSize { n: usize, min: usize },

    #[error("a train sum holds at most {0} terms")]
    TooManyTerms(usize),

    #[error("vector is numerically zero")]
    ZeroVector,

    #[error("phase ({re}, {im}) is not an n={n} root of unity")]
    InvalidPhase { n: usize, re: f64, im: f64 },

    #[error("eigenvalue class k={k} reached only {found} of {expected} independent vectors")]
    ClassDeficient { k: u8, found: usize, expected: usize },

    #[error("audit failed for {label}: {reason}")]
    AuditFailure { label: String, reason: String },

    #[error("basis Gram system is singular")]
    Singular,

    #[error("basis was built for n={basis}, vector has n={vector}")]
    BasisMismatch { basis: usize, vector: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
