//! Study protocol for one participant: a baseline assessment, two learning
//! subtasks (uninformed and informed initialization, ordered by condition),
//! then a post assessment played with the sounds learned in the second
//! subtask.
//!
//! The session is a pure state machine. Hosts feed it responses, persist the
//! [`StudyRecord`] returned for each one, and can rebuild it with
//! [`replay_study`]. Views handed to the participant never carry the true
//! state or the sound's parameter levels.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::RunRecord;
pub use crate::analysis::Condition;
use crate::bandit::{
    compute_reward, validate_confidence, Hyperparameters, InitMode, Initialization, LearnerConfig, LearnerSession,
    Priors, Response, Schedule, Status, UnvisitedOrder,
};
use crate::error::{Error, Result};
use crate::grid::{ActionId, ParameterGrid};
use crate::seed::derive;
use crate::states::StateSet;
use crate::synth::LibraryManifest;

pub const STUDY_FORMAT_VERSION: u32 = 1;
pub const CONFIDENCE_MIN: f64 = 0.0;
pub const CONFIDENCE_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionChoice {
    #[default]
    #[serde(rename = "random")]
    Random,
    UI,
    IU,
}

/// Priors given inline or as a file name for the host to resolve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorsSpec {
    Inline(Priors),
    File(PathBuf),
}

fn default_repeats() -> u32 {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub participant: String,
    /// Library used for learning and both assessments.
    pub library: String,
    /// Optional second library presented in the assessments with the same
    /// action indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_library: Option<String>,
    #[serde(default)]
    pub condition: ConditionChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub states: StateSet,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub unvisited: UnvisitedOrder,
    /// Presentations of each state per library in each assessment.
    #[serde(default = "default_repeats")]
    pub assessment_repeats: u32,
    /// Required: every session has an informed subtask.
    #[serde(default)]
    pub priors: Option<PriorsSpec>,
    /// Level indices of the sound played for each state in the baseline
    /// assessment. Defaults to each state's highest prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BTreeMap<String, Vec<usize>>>,
}

impl StudyConfig {
    pub fn new(library: impl Into<String>, priors: Priors) -> Self {
        Self {
            participant: String::new(),
            library: library.into(),
            transfer_library: None,
            condition: ConditionChoice::Random,
            seed: 0,
            hyperparameters: Hyperparameters::default(),
            states: StateSet::default(),
            schedule: Schedule::default(),
            unvisited: UnvisitedOrder::default(),
            assessment_repeats: default_repeats(),
            priors: Some(PriorsSpec::Inline(priors)),
            baseline: None,
        }
    }

    /// Loads a file-named prior from `dir`. The name must stay inside `dir`.
    pub fn resolve_priors(&mut self, dir: &Path) -> Result<()> {
        if let Some(PriorsSpec::File(name)) = &self.priors {
            if name.components().any(|c| !matches!(c, Component::Normal(_))) {
                return Err(Error::InvalidPriors(format!("prior file `{}` must be a plain name", name.display())));
            }
            let path = dir.join(name);
            if !path.is_file() {
                return Err(Error::InvalidPriors(format!("prior file `{}` not found", name.display())));
            }
            self.priors = Some(PriorsSpec::Inline(Priors::load(&path)?));
        }
        Ok(())
    }

    fn inline_priors(&self) -> Result<&Priors> {
        match &self.priors {
            Some(PriorsSpec::Inline(p)) => Ok(p),
            Some(PriorsSpec::File(name)) => Err(Error::InvalidPriors(format!(
                "prior file `{}` was not resolved",
                name.display()
            ))),
            None => Err(Error::InvalidPriors("priors are required for the informed subtask".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    BaselineAssess,
    Learning,
    PostAssess,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::BaselineAssess => "baseline_assess",
            Phase::Learning => "learning",
            Phase::PostAssess => "post_assess",
            Phase::Done => "done",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptItem {
    pub library: String,
    pub state: String,
    pub action: ActionId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PendingStudyTrial {
    trial_id: u64,
    phase: Phase,
    library: String,
    state: String,
    action: ActionId,
}

/// What the participant's client gets for a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialView {
    pub session_id: String,
    pub trial_id: u64,
    pub phase: Phase,
    pub audio_url: String,
    /// `None`: unlimited replays.
    pub max_replays: Option<u32>,
    pub state_options: Vec<String>,
    pub confidence_min: f64,
    pub confidence_max: f64,
    pub progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub phase: Phase,
    pub answered: u64,
    /// Assessment phases: trials done / total in this phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<(usize, usize)>,
    /// Learning: 1-based subtask number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtask: Option<usize>,
    pub subtasks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states_converged: Option<usize>,
    pub states_total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_trials: Option<u32>,
    pub budget: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub s_infer: String,
    pub confidence: f64,
    #[serde(default)]
    pub replay_count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub trial_id: u64,
    pub progress: Progress,
}

/// One answered trial, as logged and reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub phase: Phase,
    pub library: String,
    pub s_real: String,
    pub action: ActionId,
    pub s_infer: String,
    pub confidence: f64,
    pub replay_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

impl TrialRecord {
    pub fn correct(&self) -> bool {
        self.s_real == self.s_infer
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyHeader {
    pub format: u32,
    pub session_id: String,
    pub config: StudyConfig,
    pub condition: Condition,
    pub grid: ParameterGrid,
    /// Per library, the audio key (content hash) of each action.
    pub audio: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyRecord {
    StudyHeader(StudyHeader),
    Trial(TrialRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudySession {
    header: StudyHeader,
    priors: Priors,
    baseline: BTreeMap<String, ActionId>,
    phase: Phase,
    baseline_script: Vec<ScriptItem>,
    post_script: Vec<ScriptItem>,
    cursor: usize,
    learners: Vec<LearnerSession>,
    next_trial_id: u64,
    pending: Option<PendingStudyTrial>,
    trials: Vec<TrialRecord>,
}

fn assessment_script(
    mapping: &BTreeMap<String, ActionId>,
    states: &StateSet,
    libraries: &[String],
    repeats: u32,
    seed: u64,
) -> Vec<ScriptItem> {
    let mut items = Vec::new();
    for library in libraries {
        for state in states.names() {
            for _ in 0..repeats {
                items.push(ScriptItem {
                    library: library.clone(),
                    state: state.clone(),
                    action: mapping[state],
                });
            }
        }
    }
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    items
}

impl StudySession {
    /// Starts a session against loaded libraries. Priors must already be
    /// inline (see [`StudyConfig::resolve_priors`]).
    pub fn new(id: impl Into<String>, config: StudyConfig, libraries: &[&LibraryManifest]) -> Result<Self> {
        let find = |name: &str| {
            libraries
                .iter()
                .find(|m| m.id == name)
                .copied()
                .ok_or_else(|| Error::UnknownLibrary(name.to_string()))
        };
        let primary = find(&config.library)?;
        let mut audio = BTreeMap::new();
        audio.insert(primary.id.clone(), primary.sounds.iter().map(|s| s.sha256.clone()).collect());
        if let Some(t) = &config.transfer_library {
            let transfer = find(t)?;
            if transfer.grid != primary.grid {
                return Err(Error::MixedGrids);
            }
            audio.insert(transfer.id.clone(), transfer.sounds.iter().map(|s| s.sha256.clone()).collect());
        }
        let condition = match config.condition {
            ConditionChoice::UI => Condition::UI,
            ConditionChoice::IU => Condition::IU,
            ConditionChoice::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive(config.seed, "condition", 0));
                if rng.random::<bool>() {
                    Condition::UI
                } else {
                    Condition::IU
                }
            }
        };
        Self::from_header(StudyHeader {
            format: STUDY_FORMAT_VERSION,
            session_id: id.into(),
            config,
            condition,
            grid: primary.grid.clone(),
            audio,
        })
    }

    pub fn from_header(header: StudyHeader) -> Result<Self> {
        if header.format != STUDY_FORMAT_VERSION {
            return Err(Error::Study(format!("unsupported format {}", header.format)));
        }
        let config = &header.config;
        let grid = &header.grid;
        if !header.audio.contains_key(&config.library)
            || config.transfer_library.as_ref().is_some_and(|t| !header.audio.contains_key(t))
        {
            return Err(Error::UnknownLibrary(config.library.clone()));
        }
        if header.audio.values().any(|keys| keys.len() != grid.action_count()) {
            return Err(Error::Study("library does not cover the grid".into()));
        }
        if config.states.len() < 2 {
            return Err(Error::InvalidStates("a study needs at least 2 states".into()));
        }
        config.hyperparameters.validate()?;
        if config.assessment_repeats == 0 {
            return Err(Error::InvalidConfig("assessment_repeats must be at least 1".into()));
        }
        let priors = config.inline_priors()?.clone();
        let hp = &config.hyperparameters;
        priors.validate(&config.states, grid.action_count(), hp.q_min, hp.q_max)?;

        let baseline = match &config.baseline {
            Some(map) => {
                let mut out = BTreeMap::new();
                for state in config.states.names() {
                    let levels = map
                        .get(state)
                        .ok_or_else(|| Error::InvalidConfig(format!("baseline has no sound for `{state}`")))?;
                    out.insert(state.clone(), grid.encode(levels)?);
                }
                if let Some(extra) = map.keys().find(|k| !config.states.contains(k)) {
                    return Err(Error::UnknownState(extra.clone()));
                }
                out
            }
            None => config
                .states
                .names()
                .iter()
                .map(|s| {
                    let row = priors.get(s).expect("validated");
                    let best = (0..row.len()).fold(0, |b, i| if row[i] > row[b] { i } else { b });
                    (s.clone(), ActionId::from_index(best))
                })
                .collect(),
        };

        let seed = config.seed;
        let learners = header
            .condition
            .order()
            .into_iter()
            .map(|mode| {
                let init = match mode {
                    InitMode::Uninformed => Initialization::Uninformed,
                    InitMode::Informed => Initialization::Informed { priors: priors.clone() },
                };
                let mut lc = LearnerConfig::new(
                    grid.clone(),
                    config.states.clone(),
                    derive(seed, "learner", mode as u64),
                    init,
                );
                lc.hyperparameters = config.hyperparameters;
                lc.schedule = config.schedule;
                lc.unvisited = config.unvisited;
                LearnerSession::new(format!("{}-{}", header.session_id, mode.as_str()), lc)
            })
            .collect::<Result<Vec<_>>>()?;

        let baseline_script = assessment_script(
            &baseline,
            &config.states,
            &Self::libraries_of(config),
            config.assessment_repeats,
            derive(seed, "baseline", 0),
        );
        Ok(Self {
            header,
            priors,
            baseline,
            phase: Phase::BaselineAssess,
            baseline_script,
            post_script: Vec::new(),
            cursor: 0,
            learners,
            next_trial_id: 1,
            pending: None,
            trials: Vec::new(),
        })
    }

    fn libraries_of(config: &StudyConfig) -> Vec<String> {
        std::iter::once(config.library.clone())
            .chain(config.transfer_library.clone())
            .collect()
    }

    pub fn id(&self) -> &str {
        &self.header.session_id
    }

    pub fn header(&self) -> &StudyHeader {
        &self.header
    }

    pub fn config(&self) -> &StudyConfig {
        &self.header.config
    }

    pub fn condition(&self) -> Condition {
        self.header.condition
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn learners(&self) -> &[LearnerSession] {
        &self.learners
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn baseline_mapping(&self) -> &BTreeMap<String, ActionId> {
        &self.baseline
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    fn subtask(&self) -> Option<usize> {
        (self.phase == Phase::Learning).then(|| {
            self.learners
                .iter()
                .position(|l| l.status() == Status::Running)
                .expect("learning phase has a running subtask")
        })
    }

    fn script(&self) -> &[ScriptItem] {
        match self.phase {
            Phase::BaselineAssess => &self.baseline_script,
            Phase::PostAssess => &self.post_script,
            _ => &[],
        }
    }

    pub fn progress(&self) -> Progress {
        let subtask = self.subtask();
        let learner = subtask.map(|i| &self.learners[i]);
        let assessment = matches!(self.phase, Phase::BaselineAssess | Phase::PostAssess)
            .then(|| (self.cursor, self.script().len()));
        Progress {
            phase: self.phase,
            answered: self.trials.len() as u64,
            assessment,
            subtask: subtask.map(|i| i + 1),
            subtasks: self.learners.len(),
            states_converged: learner.map(|l| l.converged_count()),
            states_total: self.config().states.len(),
            learning_trials: learner.map(|l| l.t()),
            budget: self.config().hyperparameters.budget,
        }
    }

    pub fn audio_key(&self, library: &str, action: ActionId) -> &str {
        &self.header.audio[library][action.index()]
    }

    fn view(&self, p: &PendingStudyTrial) -> TrialView {
        TrialView {
            session_id: self.id().to_string(),
            trial_id: p.trial_id,
            phase: p.phase,
            audio_url: format!("/libraries/{}/audio/{}.wav", p.library, self.audio_key(&p.library, p.action)),
            max_replays: None,
            state_options: self.config().states.names().to_vec(),
            confidence_min: CONFIDENCE_MIN,
            confidence_max: CONFIDENCE_MAX,
            progress: self.progress(),
        }
    }

    /// The outstanding trial, if any, as the participant sees it.
    pub fn pending_view(&self) -> Option<TrialView> {
        self.pending.as_ref().map(|p| self.view(p))
    }

    /// Host-side truth of the outstanding trial. Never send this to the
    /// participant.
    pub fn pending_truth(&self) -> Option<ScriptItem> {
        self.pending.as_ref().map(|p| ScriptItem {
            library: p.library.clone(),
            state: p.state.clone(),
            action: p.action,
        })
    }

    /// Issues the next trial. Fails while one is outstanding.
    pub fn next_trial(&mut self) -> Result<TrialView> {
        if self.pending.is_some() {
            return Err(Error::TrialPending);
        }
        let (library, state, action) = match self.phase {
            Phase::Done => return Err(Error::SessionComplete),
            Phase::BaselineAssess | Phase::PostAssess => {
                let item = &self.script()[self.cursor];
                (item.library.clone(), item.state.clone(), item.action)
            }
            Phase::Learning => {
                let i = self.subtask().expect("learning");
                let trial = self.learners[i].next_trial()?;
                (self.config().library.clone(), trial.state, trial.action)
            }
        };
        let pending = PendingStudyTrial {
            trial_id: self.next_trial_id,
            phase: self.phase,
            library,
            state,
            action,
        };
        self.next_trial_id += 1;
        let view = self.view(&pending);
        self.pending = Some(pending);
        Ok(view)
    }

    /// Validates a response without applying it.
    pub fn check_feedback(&self, trial_id: u64, feedback: &Feedback) -> Result<()> {
        let pending = self.pending.as_ref().ok_or(Error::StaleTrial {
            got: trial_id,
            expected: None,
        })?;
        if pending.trial_id != trial_id {
            return Err(Error::StaleTrial {
                got: trial_id,
                expected: Some(pending.trial_id),
            });
        }
        validate_confidence(feedback.confidence)?;
        if !self.config().states.contains(&feedback.s_infer) {
            return Err(Error::UnknownState(feedback.s_infer.clone()));
        }
        Ok(())
    }

    /// Record to persist before [`StudySession::submit`] is acknowledged.
    pub fn record_for(&self, trial_id: u64, feedback: &Feedback, timestamp_ms: Option<u64>) -> Result<TrialRecord> {
        self.check_feedback(trial_id, feedback)?;
        let p = self.pending.as_ref().expect("checked");
        Ok(TrialRecord {
            trial_id,
            phase: p.phase,
            library: p.library.clone(),
            s_real: p.state.clone(),
            action: p.action,
            s_infer: feedback.s_infer.clone(),
            confidence: feedback.confidence,
            replay_count: feedback.replay_count,
            timestamp_ms,
        })
    }

    /// Applies a response produced by [`StudySession::record_for`] (or read
    /// back from a log) and advances the phase when the current one is done.
    pub fn apply(&mut self, record: TrialRecord) -> Result<SubmitAck> {
        let feedback = Feedback {
            s_infer: record.s_infer.clone(),
            confidence: record.confidence,
            replay_count: record.replay_count,
        };
        self.check_feedback(record.trial_id, &feedback)?;
        let p = self.pending.clone().expect("checked");
        if (p.phase, &p.library, &p.state, p.action) != (record.phase, &record.library, &record.s_real, record.action) {
            return Err(Error::TrialMismatch(format!(
                "trial {} was ({}, {}, action {}), record says ({}, {}, action {})",
                p.trial_id,
                p.phase.as_str(),
                p.state,
                p.action,
                record.phase.as_str(),
                record.s_real,
                record.action
            )));
        }
        match self.phase {
            Phase::Learning => {
                let i = self.subtask().expect("learning");
                let mut response = Response::new(record.s_infer.clone(), record.confidence);
                response.replay_count = record.replay_count;
                response.timestamp_ms = record.timestamp_ms;
                self.learners[i].answer(response)?;
                if self.learners.iter().all(|l| l.status() != Status::Running) {
                    self.enter_post();
                }
            }
            Phase::BaselineAssess | Phase::PostAssess => {
                self.cursor += 1;
                if self.cursor == self.script().len() {
                    self.cursor = 0;
                    self.phase = if self.phase == Phase::BaselineAssess {
                        Phase::Learning
                    } else {
                        Phase::Done
                    };
                }
            }
            Phase::Done => unreachable!("no pending trial once done"),
        }
        self.pending = None;
        self.trials.push(record);
        Ok(SubmitAck {
            trial_id: p.trial_id,
            progress: self.progress(),
        })
    }

    /// Convenience for in-process drivers: record and apply in one step.
    pub fn submit(&mut self, trial_id: u64, feedback: Feedback) -> Result<(TrialRecord, SubmitAck)> {
        let record = self.record_for(trial_id, &feedback, None)?;
        let ack = self.apply(record.clone())?;
        Ok((record, ack))
    }

    fn enter_post(&mut self) {
        let learned = self.learned_mapping().expect("both subtasks finished");
        self.post_script = assessment_script(
            &learned,
            &self.config().states,
            &Self::libraries_of(self.config()),
            self.config().assessment_repeats,
            derive(self.config().seed, "post", 0),
        );
        self.cursor = 0;
        self.phase = Phase::PostAssess;
    }

    /// Mapping learned in the second subtask.
    pub fn learned_mapping(&self) -> Result<BTreeMap<String, ActionId>> {
        let last = self.learners.last().expect("two subtasks");
        Ok(last.result()?.into_iter().map(|sa| (sa.state, sa.action)).collect())
    }

    pub fn records(&self) -> Vec<StudyRecord> {
        std::iter::once(StudyRecord::StudyHeader(self.header.clone()))
            .chain(self.trials.iter().cloned().map(StudyRecord::Trial))
            .collect()
    }

    pub fn report(&self) -> Result<StudyReport> {
        if self.phase != Phase::Done {
            return Err(Error::NotFinished(self.phase.as_str().to_string()));
        }
        let grid = &self.header.grid;
        let score = |phase: Phase| {
            let t: Vec<&TrialRecord> = self.trials.iter().filter(|t| t.phase == phase).collect();
            AssessmentScore::new(t.iter().filter(|t| t.correct()).count(), t.len())
        };
        let baseline = score(Phase::BaselineAssess);
        let post = score(Phase::PostAssess);
        let mapping_entry = |state: &str, action: ActionId| MappingEntry {
            state: state.to_string(),
            action,
            levels: grid.levels(action),
            labels: grid
                .levels(action)
                .iter()
                .zip(grid.parameters())
                .map(|(&l, p)| p.levels[l].clone())
                .collect(),
            audio_url: format!(
                "/libraries/{}/audio/{}.wav",
                self.config().library,
                self.audio_key(&self.config().library, action)
            ),
        };
        let subtasks = self
            .learners
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Ok(SubtaskReport {
                    order: i + 1,
                    init_mode: l.init_mode(),
                    status: l.status(),
                    steps: l.steps_to_convergence().expect("finished"),
                    argmax_fallback: l.status() == Status::BudgetExhausted,
                    mapping: l
                        .result()?
                        .iter()
                        .map(|sa| mapping_entry(&sa.state, sa.action))
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let trials = self
            .trials
            .iter()
            .map(|t| ReportTrial {
                correct: t.correct(),
                reward: (t.phase == Phase::Learning)
                    .then(|| compute_reward(&t.s_real, &t.s_infer, t.confidence).map(|r| r.reward))
                    .transpose()
                    .expect("validated on submit"),
                record: t.clone(),
            })
            .collect();
        Ok(StudyReport {
            session_id: self.id().to_string(),
            participant: self.config().participant.clone(),
            condition: self.condition(),
            library: self.config().library.clone(),
            transfer_library: self.config().transfer_library.clone(),
            improvement: post.correct as i64 - baseline.correct as i64,
            accuracy_delta: post.accuracy - baseline.accuracy,
            baseline,
            post,
            baseline_mapping: self.baseline.iter().map(|(s, a)| mapping_entry(s, *a)).collect(),
            post_mapping_from: self.learners.last().expect("two subtasks").init_mode(),
            subtasks,
            trials,
        })
    }

    /// Learning subtasks as analysis records (finished subtasks only).
    pub fn run_records(&self) -> Result<Vec<RunRecord>> {
        let participant = if self.config().participant.is_empty() {
            self.id().to_string()
        } else {
            self.config().participant.clone()
        };
        self.learners
            .iter()
            .filter(|l| l.status() != Status::Running)
            .map(|l| RunRecord::from_session(l.id().to_string(), participant.clone(), self.condition(), l.clone()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessmentScore {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl AssessmentScore {
    fn new(correct: usize, total: usize) -> Self {
        Self {
            correct,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub state: String,
    pub action: ActionId,
    pub levels: Vec<usize>,
    pub labels: Vec<String>,
    pub audio_url: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtaskReport {
    pub order: usize,
    pub init_mode: InitMode,
    pub status: Status,
    pub steps: u32,
    pub argmax_fallback: bool,
    pub mapping: Vec<MappingEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTrial {
    #[serde(flatten)]
    pub record: TrialRecord,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub session_id: String,
    pub participant: String,
    pub condition: Condition,
    pub library: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_library: Option<String>,
    pub baseline: AssessmentScore,
    pub post: AssessmentScore,
    /// Post minus baseline correct answers.
    pub improvement: i64,
    pub accuracy_delta: f64,
    pub baseline_mapping: Vec<MappingEntry>,
    pub post_mapping_from: InitMode,
    pub subtasks: Vec<SubtaskReport>,
    pub trials: Vec<ReportTrial>,
}

/// Rebuilds a study session from its log, re-issuing every trial and
/// checking it against the logged one.
pub fn replay_study(records: &[(usize, StudyRecord)]) -> Result<StudySession> {
    let mut iter = records.iter();
    let (line, first) = iter.next().ok_or(Error::BadRecord {
        line: 1,
        message: "missing header".into(),
    })?;
    let StudyRecord::StudyHeader(header) = first else {
        return Err(Error::BadRecord {
            line: *line,
            message: "first record must be a study header".into(),
        });
    };
    let mut session = StudySession::from_header(header.clone())?;
    for (line, record) in iter {
        let StudyRecord::Trial(trial) = record else {
            return Err(Error::BadRecord {
                line: *line,
                message: "duplicate header".into(),
            });
        };
        let diverged = |message: String| Error::ReplayDivergence { line: *line, message };
        let view = session.next_trial().map_err(|e| diverged(e.to_string()))?;
        if view.trial_id != trial.trial_id {
            return Err(diverged(format!("expected trial {}, log has {}", view.trial_id, trial.trial_id)));
        }
        session.apply(trial.clone()).map_err(|e| diverged(e.to_string()))?;
    }
    Ok(session)
}
