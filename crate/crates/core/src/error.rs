use num_bigint::BigUint;
use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or malformed input.
    #[error("invalid input: {0}")]
    Validation(String),
    /// A structure failed the membership test of its space; names the violated condition.
    #[error("not a member of the space: {0}")]
    Membership(String),
    /// The requested quantity has no closed form for this family/parameter combination.
    #[error("no closed form: {0}")]
    NoClosedForm(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Overflow, divergence or other numeric breakdown.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A step or sample budget was exhausted.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// Enumeration refused; reports the exact cardinality.
    #[error("space too large: {count} structures exceed limit {limit}")]
    TooLarge { count: BigUint, limit: u64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for CLI front ends: 2 validation, 3 numeric, 4 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 3,
            Error::Budget(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
