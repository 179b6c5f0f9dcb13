use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument is outside the operation's domain.
    InvalidInput(String),
    /// An exhaustive verifier was asked to enumerate a set beyond its limit.
    TooLarge { size: usize, limit: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::TooLarge { size, limit } => {
                write!(f, "set of size {size} exceeds exhaustive limit {limit}")
            }
        }
    }
}

impl core::error::Error for Error {}
