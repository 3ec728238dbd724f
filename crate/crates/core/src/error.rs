use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed {what}: {detail}")]
    Format { path: PathBuf, what: &'static str, detail: String },

    #[error("{path}: truncated file: expected {expected} bytes, got {actual}")]
    Truncated { path: PathBuf, expected: u64, actual: u64 },

    #[error("insufficient frames: need {need}, have {have}")]
    InsufficientFrames { need: usize, have: usize },

    #[error("frame size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),

    #[error("frame {width}x{height} is smaller than the {support}px kernel support")]
    FrameTooSmall { width: usize, height: usize, support: usize },

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension { expected: usize, actual: usize, context: &'static str },

    #[error("config hash mismatch: {0} vs {1}")]
    ConfigMismatch(String, String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown label {label:?} for clip {clip_id:?}")]
    UnknownLabel { clip_id: String, label: String },

    #[error("class {class:?} has {have} samples, need at least {need}")]
    ClassTooSmall { class: String, have: usize, need: usize },

    #[error("oversampling target {target} for class {class:?} is below its current count {have}")]
    TargetBelowCount { class: String, target: usize, have: usize },

    #[error("prediction ids do not cover truth: missing [{}], extra [{}]", missing.join(", "), extra.join(", "))]
    IdMismatch { missing: Vec<String>, extra: Vec<String> },

    #[error("need at least {need} {what}, have {have}")]
    TooFew { what: &'static str, have: usize, need: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format { path: path.into(), what, detail: detail.into() }
    }
}
