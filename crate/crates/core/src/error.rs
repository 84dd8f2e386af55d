use std::fmt;

/// Errors surfaced by the placement library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A domain or workload parameter is out of range.
    InvalidConfig(String),
    /// A cache table violates a structural constraint (capacity, ids).
    InvalidPlacement(String),
    /// The exhaustive oracle refuses instances above its enumeration bounds.
    InstanceTooLarge(String),
    /// Bad argument to a standalone operation.
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::InvalidPlacement(msg) => write!(f, "invalid placement: {msg}"),
            Error::InstanceTooLarge(msg) => write!(f, "instance too large: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
