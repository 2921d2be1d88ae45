//! Libraries, live sessions and their on-disk logs.
//!
//! Layout under the data directory: `sessions/<id>.jsonl` holds each
//! session's study log, `index.json` lists sessions for browsing. The logs are
//! authoritative; the index is rebuilt from them at startup.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sonolearn_core::eventlog::{read_jsonl, JsonlAppender};
use sonolearn_core::fsio::write_json_atomic;
use sonolearn_core::study::{
    replay_study, Condition, Feedback, Phase, Progress, StudyConfig, StudyRecord, StudySession, SubmitAck, TrialView,
};
use sonolearn_core::synth::{LibraryManifest, SoundEntry, MANIFEST_FILE};
use sonolearn_core::{Error, Result};
use tokio::sync::Mutex;

use crate::config::ServiceConfig;

pub const SESSIONS_DIR: &str = "sessions";
pub const INDEX_FILE: &str = "index.json";

pub struct Library {
    pub manifest: LibraryManifest,
    pub dir: PathBuf,
}

impl Library {
    /// Resolves `name` as a content hash (with or without `.wav`) or a file name.
    pub fn sound(&self, name: &str) -> Option<&SoundEntry> {
        let key = name.strip_suffix(".wav").unwrap_or(name);
        self.manifest.by_hash(key).or_else(|| self.manifest.by_file(name))
    }
}

pub struct Slot {
    pub session: StudySession,
    log: JsonlAppender,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub session_id: String,
    pub participant: String,
    pub library: String,
    pub condition: Condition,
    pub phase: Phase,
    pub log: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreatedView {
    pub session_id: String,
    pub condition: Condition,
    pub phase: Phase,
    pub progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusView {
    pub session_id: String,
    pub condition: Condition,
    pub phase: Phase,
    pub progress: Progress,
    /// The outstanding trial, so a client can resume after a conflict.
    pub pending: Option<TrialView>,
}

pub struct AppState {
    pub config: ServiceConfig,
    libraries: BTreeMap<String, Library>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Slot>>>>,
    index: std::sync::Mutex<BTreeMap<String, IndexEntry>>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn io(context: String) -> impl FnOnce(std::io::Error) -> Error {
    move |source| Error::Io { context, source }
}

/// Every sub-directory of `dir` holding a manifest.
pub fn load_libraries(dir: &Path) -> Result<BTreeMap<String, Library>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(io(format!("reading {}", dir.display())))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    for lib_dir in dirs {
        let manifest = LibraryManifest::load(&lib_dir)?;
        if out.contains_key(&manifest.id) {
            return Err(Error::InvalidConfig(format!("duplicate library id `{}`", manifest.id)));
        }
        out.insert(manifest.id.clone(), Library { manifest, dir: lib_dir });
    }
    Ok(out)
}

fn status_view(session: &StudySession) -> StatusView {
    StatusView {
        session_id: session.id().to_string(),
        condition: session.condition(),
        phase: session.phase(),
        progress: session.progress(),
        pending: session.pending_view(),
    }
}

/// Rebuilds a session from its log, cutting off a torn final record.
fn recover(path: &Path) -> Result<StudySession> {
    let contents = read_jsonl::<StudyRecord>(path)?;
    if let Some(t) = &contents.truncated {
        let len = std::fs::metadata(path).map_err(io(format!("stat {}", path.display())))?.len();
        tracing::warn!(log = %path.display(), line = t.line, "dropping torn final record");
        let file = std::fs::OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(io(format!("opening {}", path.display())))?;
        file.set_len(len - t.bytes as u64)
            .map_err(io(format!("truncating {}", path.display())))?;
    }
    let mut session = replay_study(&contents.records)?;
    // the trial outstanding at shutdown is re-issued with the same id
    if session.phase() != Phase::Done {
        session.next_trial()?;
    }
    Ok(session)
}

impl AppState {
    /// Loads libraries and recovers every logged session.
    pub fn open(config: ServiceConfig) -> Result<Self> {
        let libraries = load_libraries(&config.library_dir)?;
        let sessions_dir = config.data_dir.join(SESSIONS_DIR);
        std::fs::create_dir_all(&sessions_dir).map_err(io(format!("creating {}", sessions_dir.display())))?;
        let mut logs: Vec<PathBuf> = std::fs::read_dir(&sessions_dir)
            .map_err(io(format!("reading {}", sessions_dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        logs.sort();
        let mut sessions = HashMap::new();
        let mut index = BTreeMap::new();
        for path in logs {
            let session = recover(&path)?;
            let log = JsonlAppender::open(&path)?;
            index.insert(session.id().to_string(), Self::index_entry(&session));
            sessions.insert(session.id().to_string(), Arc::new(Mutex::new(Slot { session, log })));
        }
        tracing::info!(libraries = libraries.len(), sessions = sessions.len(), "state loaded");
        let state = Self {
            config,
            libraries,
            sessions: RwLock::new(sessions),
            index: std::sync::Mutex::new(index),
        };
        state.write_index()?;
        Ok(state)
    }

    fn index_entry(session: &StudySession) -> IndexEntry {
        IndexEntry {
            session_id: session.id().to_string(),
            participant: session.config().participant.clone(),
            library: session.config().library.clone(),
            condition: session.condition(),
            phase: session.phase(),
            log: format!("{SESSIONS_DIR}/{}.jsonl", session.id()),
        }
    }

    fn write_index(&self) -> Result<()> {
        let index = self.index.lock().expect("index lock");
        let entries: Vec<&IndexEntry> = index.values().collect();
        write_json_atomic(&self.config.data_dir.join(INDEX_FILE), &entries)
    }

    fn update_index(&self, session: &StudySession) -> Result<()> {
        let entry = Self::index_entry(session);
        let changed = {
            let mut index = self.index.lock().expect("index lock");
            index.insert(entry.session_id.clone(), entry.clone()) != Some(entry)
        };
        if changed {
            self.write_index()?;
        }
        Ok(())
    }

    pub fn library(&self, id: &str) -> Option<&Library> {
        self.libraries.get(id)
    }

    pub fn library_ids(&self) -> Vec<String> {
        self.libraries.keys().cloned().collect()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("sessions lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn slot(&self, id: &str) -> Option<Arc<Mutex<Slot>>> {
        self.sessions.read().expect("sessions lock").get(id).cloned()
    }

    pub async fn create(&self, mut config: StudyConfig) -> Result<CreatedView> {
        config.resolve_priors(&self.config.priors_dir)?;
        let manifests: Vec<&LibraryManifest> = self.libraries.values().map(|l| &l.manifest).collect();
        let id = loop {
            let id = format!("{:016x}", rand::random::<u64>());
            if self.slot(&id).is_none() {
                break id;
            }
        };
        let session = StudySession::new(id.clone(), config, &manifests)?;
        let path = self.config.data_dir.join(SESSIONS_DIR).join(format!("{id}.jsonl"));
        let mut log = JsonlAppender::open(&path)?;
        log.append(&StudyRecord::StudyHeader(session.header().clone()))?;
        let view = CreatedView {
            session_id: id.clone(),
            condition: session.condition(),
            phase: session.phase(),
            progress: session.progress(),
        };
        self.update_index(&session)?;
        self.sessions
            .write()
            .expect("sessions lock")
            .insert(id, Arc::new(Mutex::new(Slot { session, log })));
        tracing::info!(session = %view.session_id, condition = ?view.condition, "session created");
        Ok(view)
    }

    pub async fn next(&self, id: &str) -> Option<Result<TrialView>> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        Some(slot.session.next_trial())
    }

    /// Logs the response durably, then applies it.
    pub async fn feedback(&self, id: &str, trial_id: u64, feedback: Feedback) -> Option<Result<SubmitAck>> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        let result = (|| {
            let record = slot.session.record_for(trial_id, &feedback, Some(now_ms()))?;
            slot.log.append(&StudyRecord::Trial(record.clone()))?;
            let ack = slot.session.apply(record)?;
            self.update_index(&slot.session)?;
            Ok(ack)
        })();
        Some(result)
    }

    pub async fn status(&self, id: &str) -> Option<StatusView> {
        let slot = self.slot(id)?;
        let slot = slot.lock().await;
        Some(status_view(&slot.session))
    }

    pub async fn with_session<T>(&self, id: &str, f: impl FnOnce(&StudySession) -> T) -> Option<T> {
        let slot = self.slot(id)?;
        let slot = slot.lock().await;
        Some(f(&slot.session))
    }
}
