use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad error category, used by the CLI to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input files or data that cannot be processed.
    Data,
    /// Bad configuration or hyperparameters.
    Config,
    /// A violated internal invariant.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing or wrong header, expected `timestamp_ms,ax,ay,az`")]
    MissingHeader,
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("timestamp not strictly increasing at line {0}")]
    NonMonotonicTimestamp(usize),
    #[error("non-finite value at line {0}")]
    NonFiniteValue(usize),
    #[error("corpus contains no recordings")]
    EmptyCorpus,
    #[error("duplicate session {session} for subject {subject}")]
    DuplicateSubjectSession { subject: String, session: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series is empty")]
    EmptySeries,
    #[error("series contains a non-finite value at index {0}")]
    NonFiniteInput(usize),
    #[error("cutoff {cutoff_hz} Hz must lie in (0, {nyquist_hz}) Hz")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("signal of {len} samples is shorter than one window of {window}")]
    SignalTooShort { len: usize, window: usize },
    #[error("window has {actual} samples, expected {expected}")]
    WindowLengthMismatch { expected: usize, actual: usize },

    #[error("need at least 2 vectors to fit a standardizer, got {0}")]
    TooFewVectors(usize),
    #[error("need at least k={k} points, got {points}")]
    TooFewPoints { k: usize, points: usize },
    #[error("assignment does not match points or centroids")]
    AssignmentMismatch,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("word sequence of {len} is shorter than a segment of {segment}")]
    SequenceTooShort { len: usize, segment: usize },
    #[error("word sequence is empty")]
    EmptySequence,

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparam(String),

    #[error(
        "recording {recording} has {len} samples, too short for {folds} folds of window {window}"
    )]
    RecordingTooShort {
        recording: String,
        len: usize,
        folds: usize,
        window: usize,
    },
    #[error("fold {0} produced no test samples")]
    InsufficientSegments(usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("reports are not comparable: {0}")]
    MismatchedConfigs(String),

    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidHyperparam(_) | Error::UnknownAlgorithm(_) | Error::Config(_) => {
                ErrorKind::Config
            }
            Error::Internal(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MissingHeader => "missing_header",
            Error::MalformedRow(_) => "malformed_row",
            Error::NonMonotonicTimestamp(_) => "non_monotonic_timestamp",
            Error::NonFiniteValue(_) => "non_finite_value",
            Error::EmptyCorpus => "empty_corpus",
            Error::DuplicateSubjectSession { .. } => "duplicate_subject_session",
            Error::InvalidParams(_) => "invalid_params",
            Error::EmptySeries => "empty_series",
            Error::NonFiniteInput(_) => "non_finite_input",
            Error::InvalidCutoff { .. } => "invalid_cutoff",
            Error::SignalTooShort { .. } => "signal_too_short",
            Error::WindowLengthMismatch { .. } => "window_length_mismatch",
            Error::TooFewVectors(_) => "too_few_vectors",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::AssignmentMismatch => "assignment_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SequenceTooShort { .. } => "sequence_too_short",
            Error::EmptySequence => "empty_sequence",
            Error::UnknownAlgorithm(_) => "unknown_algorithm",
            Error::DegenerateTrainingSet(_) => "degenerate_training_set",
            Error::InvalidHyperparam(_) => "invalid_hyperparam",
            Error::RecordingTooShort { .. } => "recording_too_short",
            Error::InsufficientSegments(_) => "insufficient_segments",
            Error::EmptyMatrix => "empty_matrix",
            Error::MismatchedConfigs(_) => "mismatched_configs",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Internal(_) => "internal",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
