use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("operator must be traceless, trace = {trace}")]
    NonzeroTrace { trace: Complex64 },

    #[error("density matrix must have unit trace, trace = {trace}")]
    NotUnitTrace { trace: Complex64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size incompatible with drive: {0}")]
    StepIncompatible(String),

    #[error("non-finite state encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("{what} refused for N = {n}: dense path is limited to N <= {limit}")]
    SizeGuard { what: &'static str, n: usize, limit: usize },

    #[error(transparent)]
    Cache(#[from] CacheError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures while reading or writing a structure-constant cache file.
#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: bad magic bytes {found:?}")]
    BadMagic { path: PathBuf, found: [u8; 4] },

    #[error("{path}: unsupported format version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },

    #[error("{path}: unknown tensor tag {tag:#04x}")]
    UnknownTag { path: PathBuf, tag: u8 },

    #[error("{path}: holds a `{found}` tensor, expected `{expected}`")]
    TagMismatch { path: PathBuf, expected: char, found: char },

    #[error("{path}: tensor is for N = {found}, expected N = {expected}")]
    DimensionMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{path}: truncated, expected {expected} bytes but found {found}")]
    Truncated { path: PathBuf, expected: u64, found: u64 },

    #[error("{path}: integrity failure, {detail}")]
    Integrity { path: PathBuf, detail: String },

    #[error("tensor must be in a sorted layout before saving")]
    UnsortedTensor,

    #[error("cache I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Configuration file errors, carrying the line or key that failed.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("key `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("{path}:{line}: {message}")]
    MatrixFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model validation failed: {0}")]
    Validation(String),
}
