use thiserror::Error;

/// Errors shared across the solver stack.
#[derive(Debug, Error)]
pub enum BilevelError {
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cannot sample from an empty dataset")]
    EmptyDataset,

    #[error("batch index {index} out of range for dataset of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("divergence: |{variable}| = {norm:.3e} exceeded {limit:.1e} at outer iteration {k}")]
    Diverged {
        variable: &'static str,
        norm: f64,
        limit: f64,
        k: usize,
    },

    #[error("{path}: {reason}")]
    DataFormat { path: String, reason: String },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BilevelError>;
