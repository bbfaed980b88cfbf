use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Arguments violate an operation's preconditions.
    InvalidInput(String),
    /// A parameter combination that cannot produce a meaningful result.
    Config(String),
    /// A function evaluated outside its domain.
    Domain(String),
    /// WAV format tag the decoder does not handle.
    UnsupportedEncoding(u16),
    /// Container structure is broken at the given byte offset.
    Decode {
        offset: usize,
        reason: String,
    },
    /// Too few rows or frames for the requested statistic.
    InsufficientData(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::UnsupportedEncoding(tag) => write!(f, "unsupported encoding {tag:#06x}"),
            Error::Decode { offset, reason } => {
                write!(f, "decode error at byte {offset}: {reason}")
            }
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
