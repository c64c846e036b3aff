use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested object exceeds the dense desk-scale budget.
    #[error("capacity exceeded in {what}: requested {requested}, supported up to {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    /// Two operands do not have compatible dimensions.
    #[error("shape mismatch: {context} (left {left}, right {right})")]
    ShapeMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An energy window that contains no eigenstates.
    #[error("empty energy shell: no eigenvalue in [{lo}, {hi})")]
    EmptyShell { lo: f64, hi: f64 },

    /// An operation that requires Z-product gates was given a general diagonal gate.
    #[error("unsupported gate form: {0}")]
    UnsupportedForm(&'static str),

    #[error("calibration failed: {0}")]
    Calibration(String),

    /// The swept quantity provably never reaches the requested threshold.
    #[error("no convergence: {0}")]
    NonConvergent(String),

    /// A run configuration references an ensemble that violates its contract.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
