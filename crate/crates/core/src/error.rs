use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the tracking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid dimensions {width}x{height}: both must be at least 1")]
    InvalidDimensions { width: usize, height: usize },

    #[error("buffer length {len} does not match {width}x{height}")]
    BufferLength { len: usize, width: usize, height: usize },

    #[error("value out of range in {what}: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("unsupported keypoint count {0}: must be odd and between 1 and 13")]
    KeypointCount(usize),

    #[error("motion history needs at least 2 entries, has {0}")]
    InsufficientHistory(usize),

    #[error("frame index {next} does not follow {last} in motion history")]
    NonIncreasingFrame { last: usize, next: usize },

    #[error("keypoint sets differ in length: {0} vs {1}")]
    KeypointMismatch(usize, usize),

    #[error("memory bank is empty")]
    EmptyBank,

    #[error("memory bank has no first-frame entry")]
    MissingFirstFrame,

    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown segmenter `{0}` (expected `oracle` or `matcher`)")]
    UnknownSegmenter(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),

    #[error("ground truth missing for frame {0}")]
    MissingGroundTruth(usize),

    #[error("frame count mismatch: {0} vs {1}")]
    CountMismatch(usize, usize),

    #[error("no frames to evaluate")]
    NoFrames,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
