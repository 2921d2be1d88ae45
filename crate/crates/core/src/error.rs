use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter grid: {0}")]
    InvalidGrid(String),

    #[error("level index {index} out of range for parameter `{parameter}` ({levels} levels)")]
    LevelOutOfRange {
        parameter: String,
        index: usize,
        levels: usize,
    },

    #[error("expected {expected} level indices, got {got}")]
    LevelArity { expected: usize, got: usize },

    #[error("action index {index} out of range (action count {count})")]
    ActionOutOfRange { index: usize, count: usize },

    #[error("invalid state set: {0}")]
    InvalidStates(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid hyper-parameters: {0}")]
    InvalidHyperparameters(String),

    #[error("priors are missing entries: {}", .0.join(", "))]
    MissingPriors(Vec<String>),

    #[error("prior for ({state}, action {action}) is {value}, outside [{min}, {max}]")]
    PriorOutOfRange {
        state: String,
        action: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("uncertainty is undefined at iteration 0")]
    ZeroIteration,

    #[error("Q-update requires a visit count of at least 1")]
    ZeroCount,

    #[error("confidence {0} outside [0, 10]")]
    InvalidConfidence(f64),

    #[error("a trial is already awaiting feedback")]
    TrialPending,

    #[error("no trial is awaiting feedback")]
    NoPendingTrial,

    #[error("feedback does not match the pending trial: {0}")]
    TrialMismatch(String),

    #[error("session is complete")]
    SessionComplete,

    #[error("session is still running")]
    SessionRunning,

    #[error("invalid level mapping: {0}")]
    InvalidLevels(String),

    #[error("base sample ({base_len} samples) is longer than one beat at {bpm} BPM / {bpl} BPL ({beat_len} samples)")]
    BaseTooLong {
        bpm: f64,
        bpl: u32,
        base_len: usize,
        beat_len: usize,
    },

    #[error("invalid base sample: {0}")]
    InvalidSample(String),

    #[error("rendering action {action} ({file}): {source}")]
    Render {
        action: usize,
        file: String,
        #[source]
        source: Box<Error>,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("log {path}: empty log")]
    EmptyLog { path: PathBuf },

    #[error("log record {line}: {message}")]
    BadRecord { line: usize, message: String },

    #[error("replay diverged at record {line}: {message}")]
    ReplayDivergence { line: usize, message: String },

    #[error("empty cohort")]
    EmptyCohort,

    #[error("empty input")]
    EmptyInput,

    #[error("runs do not share a parameter grid")]
    MixedGrids,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("study: {0}")]
    Study(String),

    #[error("unknown sound library `{0}`")]
    UnknownLibrary(String),

    #[error("session is not finished (phase {0})")]
    NotFinished(String),

    #[error("trial {got} is not the outstanding trial{}", .expected.map(|e| format!(" ({e})")).unwrap_or_default())]
    StaleTrial { got: u64, expected: Option<u64> },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
