use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("frame `{frame_id}`: feature dimension {found} does not match dataset dimension {expected}")]
    DimensionMismatch {
        frame_id: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate frame id `{0}`")]
    DuplicateFrame(String),

    #[error("ground truth for event `{event_id}` references unknown frame `{frame_id}`")]
    UnknownFrame { event_id: String, frame_id: String },

    #[error("ground truth references unknown event `{0}`")]
    UnknownEvent(String),

    #[error("duplicate ground truth record for event `{0}`")]
    DuplicateGroundTruth(String),

    #[error("dataset failed validation with {} violation(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),

    #[error("event `{0}` has no ground truth")]
    MissingGroundTruth(String),

    #[error("label and score key sets differ (e.g. `{0}`)")]
    KeyMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("thresholds must be strictly increasing")]
    UnsortedThresholds,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("face score {0} exceeds the exponential guard of 700")]
    ExponentOverflow(f64),

    #[error("ranked input does not match the kept frames: {0}")]
    Coverage(String),

    #[error("invalid fusion weights: {0}")]
    InvalidWeights(String),

    #[error("feature vectors of different length ({0} vs {1})")]
    FeatureLength(usize, usize),

    #[error("summary length {t} out of range 1..={max}")]
    LengthOutOfRange { t: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
