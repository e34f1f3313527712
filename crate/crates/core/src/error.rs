//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integer capacity exceeded while computing {0}")]
    Capacity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular block at degree {degree}: the measure admits no orthogonal family there")]
    SingularBlock { degree: usize },

    #[error("leading block is singular; last quasi-determinant is undefined")]
    SingularLeadingBlock,

    #[error("node set is not poised: sample matrix certificate {certificate:e}")]
    NotPoised { certificate: f64 },

    #[error("polynomial division left a nonzero remainder (residual {residual:e})")]
    InexactDivision { residual: f64 },

    #[error("node {index} does not lie on factor {factor}: |R(p)| = {magnitude:e}")]
    NodeOffVariety {
        index: usize,
        factor: usize,
        magnitude: f64,
    },

    #[error("truncation degree {have} too small: this operation needs L >= {needed}")]
    DegreeOverflow { needed: usize, have: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("poised-set search exhausted {draws} draws (best certificate {best:e}); {reason}")]
    BudgetExhausted {
        draws: usize,
        best: f64,
        reason: String,
    },

    #[error("root finder did not converge on the restricted factor")]
    RootFinding,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
