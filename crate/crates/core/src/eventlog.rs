//! Append-only JSONL logs and replay.
//!
//! A learner log is one header line carrying the full [`LearnerConfig`]
//! (seed included) followed by one line per applied [`FeedbackEvent`].
//! Replay re-runs `next_trial` from the seeded config and checks that it
//! reproduces each logged `(s_real, action)` before applying the response, so
//! a successful replay rebuilds the exact session.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bandit::{FeedbackEvent, LearnerConfig, LearnerSession};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerRecord {
    Header(LearnerHeader),
    Feedback(FeedbackEvent),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerHeader {
    pub format: u32,
    pub session_id: String,
    pub config: LearnerConfig,
}

/// The last line of a log was cut short (no trailing newline and unparsable).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// 1-based line number of the partial record.
    pub line: usize,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogContents<T> {
    /// Records paired with their 1-based line numbers.
    pub records: Vec<(usize, T)>,
    pub truncated: Option<Truncation>,
}

/// Parses JSONL text. A malformed final line without a trailing newline is
/// reported as truncation; any other malformed line is an error.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<LogContents<T>> {
    let mut records = Vec::new();
    let mut truncated = None;
    let ends_clean = text.ends_with('\n');
    let lines: Vec<&str> = text.split_terminator('\n').collect();
    for (i, raw) in lines.iter().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            return Err(Error::BadRecord {
                line: line_no,
                message: "blank line".into(),
            });
        }
        match serde_json::from_str::<T>(line) {
            Ok(r) => records.push((line_no, r)),
            Err(_) if i + 1 == lines.len() && !ends_clean => {
                truncated = Some(Truncation {
                    line: line_no,
                    bytes: line.len(),
                });
            }
            Err(e) => {
                return Err(Error::BadRecord {
                    line: line_no,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(LogContents { records, truncated })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<LogContents<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyLog { path: path.to_path_buf() });
    }
    parse_jsonl(&text)
}

pub fn to_jsonl_line<T: Serialize>(record: &T) -> Result<String> {
    let mut s = serde_json::to_string(record)?;
    s.push('\n');
    Ok(s)
}

/// Appends records to a file, flushing and syncing after each one.
pub struct JsonlAppender {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let line = to_jsonl_line(record)?;
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.flush())
            .and_then(|_| self.out.get_ref().sync_data())
            .map_err(|e| Error::io(format!("appending to {}", self.path.display()), e))
    }
}

/// Full log of a learner session as JSONL text.
pub fn learner_log(session: &LearnerSession) -> Result<String> {
    let mut out = to_jsonl_line(&LearnerRecord::Header(LearnerHeader {
        format: FORMAT_VERSION,
        session_id: session.id().to_string(),
        config: session.config().clone(),
    }))?;
    for ev in session.events() {
        out.push_str(&to_jsonl_line(&LearnerRecord::Feedback(ev.clone()))?);
    }
    Ok(out)
}

pub fn write_learner_log(path: &Path, session: &LearnerSession) -> Result<()> {
    crate::fsio::write_atomic(path, learner_log(session)?.as_bytes())
}

/// Rebuilds a learner session from log records.
pub fn replay_learner(records: &[(usize, LearnerRecord)]) -> Result<LearnerSession> {
    let mut iter = records.iter();
    let (line, header) = iter.next().ok_or(Error::BadRecord {
        line: 1,
        message: "missing header".into(),
    })?;
    let header = match header {
        LearnerRecord::Header(h) => h,
        LearnerRecord::Feedback(_) => {
            return Err(Error::BadRecord {
                line: *line,
                message: "first record must be a header".into(),
            })
        }
    };
    if header.format != FORMAT_VERSION {
        return Err(Error::BadRecord {
            line: *line,
            message: format!("unsupported format {}", header.format),
        });
    }
    let mut session = LearnerSession::new(header.session_id.clone(), header.config.clone())?;
    for (line, record) in iter {
        let event = match record {
            LearnerRecord::Feedback(ev) => ev,
            LearnerRecord::Header(_) => {
                return Err(Error::BadRecord {
                    line: *line,
                    message: "unexpected second header".into(),
                })
            }
        };
        let diverged = |message: String| Error::ReplayDivergence { line: *line, message };
        let trial = session.next_trial().map_err(|e| diverged(e.to_string()))?;
        if trial.state != event.s_real || trial.action != event.action || trial.iteration != event.iteration {
            return Err(diverged(format!(
                "log has ({}, action {}, t={}) but the session schedules ({}, action {}, t={})",
                event.s_real, event.action, event.iteration, trial.state, trial.action, trial.iteration
            )));
        }
        session.apply_feedback(event.clone()).map_err(|e| diverged(e.to_string()))?;
    }
    Ok(session)
}
