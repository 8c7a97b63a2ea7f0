use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A column with no nonzero entry has Lipschitz constant zero.
    #[error("invalid instance: column {column} is identically zero")]
    ZeroColumn { column: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible start: coordinate {index} is {value} (must be >= 0 and finite)")]
    InfeasibleStart { index: usize, value: f64 },
}
