//! Error taxonomy shared by every layer of the library.
//!
//! Numerical code here never silently degrades: running out of tracked
//! digits, blowing a cell budget, or failing to stabilize an improper
//! integral are all hard errors that carry enough context to re-run the
//! computation with bigger knobs.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Division by an exact zero.
    #[error("division by zero")]
    DivisionByZero,

    /// A digit-level computation lost all significant digits, or needed
    /// digits beyond the tracked precision.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    /// A cell enumeration would exceed the configured budget.
    #[error("cell budget exceeded: needed {needed} cells, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    /// An improper integral failed the three-zero-shell stabilization
    /// test within the allowed radius.
    #[error("shell sum did not stabilize within radius {max_shell}")]
    NotStabilized { max_shell: i64 },

    /// A matrix that must be invertible is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// The requested point lies outside the domain of the operation
    /// (e.g. a Cayley chart at a non-Cayley element, or a kernel at the
    /// identity where it is a delta, not a function).
    #[error("outside the domain of the operation: {0}")]
    OffDomain(String),

    /// A regularity hypothesis fails (vanishing Weyl denominator,
    /// non-regular semisimple element, ...).
    #[error("irregular element: {0}")]
    Irregular(String),

    /// The configuration asks for something the library deliberately
    /// does not do.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed input data (files, flags, matrix shapes, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by shape checks all over the linear algebra.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
