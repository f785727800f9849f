use thiserror::Error;

/// Errors raised by matrix construction, priority derivation, manipulation,
/// generation and the file formats. Indices carried by variants are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("matrix must have at least 2 alternatives, got {0}")]
    TooSmall(usize),

    #[error("entry ({}, {}) is not a positive finite number: {value}", .i + 1, .j + 1)]
    NonPositiveEntry { i: usize, j: usize, value: f64 },

    #[error("entries ({}, {}) and ({}, {}) are not reciprocal: product = {product}", .i + 1, .j + 1, .j + 1, .i + 1)]
    NotReciprocal { i: usize, j: usize, product: f64 },

    #[error("weight {} is not positive: {value}", .index + 1)]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("no random index available for n = {0}")]
    RandomIndexUnavailable(usize),

    #[error("invalid alternative indices p = {p}, q = {q} for n = {n}")]
    InvalidIndices { p: usize, q: usize, n: usize },

    #[error("change factor alpha = {alpha} is out of range (must exceed {bound})")]
    AlphaOutOfRange { alpha: f64, bound: f64 },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("generation budget exceeded after {attempts} attempts")]
    GenerationBudgetExceeded { attempts: u64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("missing required config key `{0}`")]
    MissingRequired(String),

    #[error("config value out of range for `{name}`: {message}")]
    Range { name: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
