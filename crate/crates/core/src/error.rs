//! Error type shared across the solver stack.

use thiserror::Error;

/// Errors produced by container construction, structural analysis,
/// factorization, and instance I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) out of bounds for {nrows} x {ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The pattern admits no perfect matching (zero-free diagonal after
    /// permutation), so any factorization of generic values must break down.
    #[error("structurally singular: {0}")]
    StructurallySingular(String),

    #[error("block structure violation: {0}")]
    StructureViolation(String),

    #[error("invalid pivot: {0}")]
    InvalidPivot(String),

    #[error("numerically singular: {0}")]
    Singular(String),

    #[error("diagonal block {block} is numerically singular")]
    SingularBlock { block: usize },

    /// The baseline factorization found no acceptable 1x1 or 2x2 pivot.
    #[error("factorization breakdown at elimination step {step}: no acceptable pivot")]
    Breakdown { step: usize },

    #[error("eigenvalue iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bad instance data: {0}")]
    BadInstance(String),
}

/// Coarse failure classification for callers that map errors to process exit
/// codes: structural defects, numeric breakdowns, and I/O failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Structural,
    Numeric,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            IndexOutOfBounds { .. }
            | DimensionMismatch(_)
            | InvalidPermutation(_)
            | InvalidParameter(_)
            | StructurallySingular(_)
            | StructureViolation(_)
            | InvalidPivot(_) => ErrorClass::Structural,
            Singular(_) | SingularBlock { .. } | Breakdown { .. } | NoConvergence { .. } => {
                ErrorClass::Numeric
            }
            Io(_) | Parse { .. } | BadInstance(_) => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
