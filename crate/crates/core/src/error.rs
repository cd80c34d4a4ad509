use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file size {actual} bytes is not a multiple of the {frame_bytes}-byte frame implied by the video spec")]
    SizeMismatch { actual: u64, frame_bytes: u64 },

    #[error("unsupported video format: {0}")]
    UnsupportedFormat(String),

    #[error("frame index {index} out of range (frame count {count})")]
    FrameOutOfRange { index: usize, count: usize },

    #[error("reference and distorted videos differ: {0}")]
    VideoMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing subband weight for level {level}")]
    MissingWeight { level: usize },

    #[error("band unavailable: {0}")]
    BandUnavailable(String),

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("unknown feature '{name}' (valid: {valid})")]
    UnknownFeature { name: String, valid: String },

    #[error("schema mismatch: expected [{expected}], got [{actual}]")]
    SchemaMismatch { expected: String, actual: String },

    #[error("degenerate feature column '{0}' (min == max)")]
    DegenerateFeature(String),

    #[error("solver did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("model version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },

    #[error("schema hash mismatch: header says {stored}, schema hashes to {computed}")]
    SchemaHashMismatch { stored: String, computed: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
