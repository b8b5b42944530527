use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet mismatch: {left} vs {right} generators")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("generator index {index} outside 1..={alphabet}")]
    IndexOutOfRange { index: usize, alphabet: usize },

    #[error("degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("projection/oracle mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("not computable: {0}")]
    NotComputable(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polynomial is not self-adjoint")]
    NotSelfAdjoint,

    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
