use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("box too large: {what} ({actual} > {limit})")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("site {0} is not part of the volume")]
    SiteNotInVolume(usize),

    #[error("site {0} is not a boundary site")]
    NotBoundarySite(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pair is not stochastically ordered: entry {index} = {value:e}")]
    NotOrdered { index: usize, value: f64 },

    #[error("distributions live on different supports ({0} vs {1})")]
    SupportMismatch(usize, usize),

    #[error("transport plan marginal mismatch: {0:e}")]
    MarginalMismatch(f64),

    #[error("bisection bracket does not straddle zero: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    BadBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
