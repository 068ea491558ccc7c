use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A constraint cannot be met for the named vehicle terminal.
    #[error("infeasible for VT {vt}: {reason}")]
    Infeasible { vt: usize, reason: String },

    /// Zero surrogate rate while remote bits are still assigned.
    #[error("degenerate rate for VT {vt}")]
    DegenerateRate { vt: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}
