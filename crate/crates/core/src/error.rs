use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Array lengths or cube/model dimensions disagree.
    #[error("size mismatch: {0}")]
    Size(String),

    /// Input data failed validation (non-finite values, non-binary masks, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// A parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation refused to run because it would be too large.
    #[error("refused: {0}")]
    Refused(String),

    /// The AMP iteration produced a non-finite or exploding noise estimate.
    #[error("divergence at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    /// Inconsistent CLI inputs detected before any computation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("{path}: short file, expected {expected} bytes, found {actual}")]
    ShortFile {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("{path}: trailing data, expected {expected} bytes, found {actual}")]
    TrailingData {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("{path}: header dimensions overflow")]
    DimensionOverflow { path: PathBuf },

    #[error("{path}: aperture byte {value} at offset {offset} is not 0 or 1")]
    InvalidApertureByte {
        path: PathBuf,
        offset: usize,
        value: u8,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image output: {0}")]
    Image(String),
}

impl Error {
    /// Process exit code for the error class. 0 is success and 2 is a
    /// command-line usage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Size(_) => 3,
            Error::Validation(_) => 4,
            Error::Domain(_) => 5,
            Error::Refused(_) => 6,
            Error::Divergence { .. } => 7,
            Error::Config(_) => 8,
            Error::BadMagic { .. } => 10,
            Error::ShortFile { .. } | Error::TrailingData { .. } => 11,
            Error::DimensionOverflow { .. } => 12,
            Error::InvalidApertureByte { .. } => 13,
            Error::Io { .. } => 14,
            Error::Image(_) => 15,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
