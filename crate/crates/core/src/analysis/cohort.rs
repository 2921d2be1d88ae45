use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandit::{FeedbackEvent, InitMode, LearnerSession, StateAction, Status};
use crate::error::{Error, Result};
use crate::eventlog::{read_jsonl, replay_learner, write_learner_log};
use crate::fsio::write_json_atomic;
use crate::grid::ParameterGrid;
use crate::states::StateSet;
use crate::synth::LevelMapping;

pub const COHORT_FILE: &str = "cohort.json";
pub const RUNS_DIR: &str = "runs";

/// Order of the two learning subtasks within one participant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Uninformed first, then informed.
    UI,
    IU,
}

impl Condition {
    pub fn order(self) -> [InitMode; 2] {
        match self {
            Condition::UI => [InitMode::Uninformed, InitMode::Informed],
            Condition::IU => [InitMode::Informed, InitMode::Uninformed],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::UI => "UI",
            Condition::IU => "IU",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "UI" => Ok(Condition::UI),
            "IU" => Ok(Condition::IU),
            other => Err(Error::InvalidConfig(format!("unknown condition `{other}`"))),
        }
    }
}

/// One finished learning session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub participant: String,
    pub condition: Condition,
    pub init_mode: InitMode,
    pub status: Status,
    pub steps: u32,
    pub mapping: Vec<StateAction>,
    /// Log path relative to the cohort directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
    #[serde(skip)]
    pub session: Option<LearnerSession>,
}

impl RunRecord {
    pub fn from_session(
        run_id: impl Into<String>,
        participant: impl Into<String>,
        condition: Condition,
        session: LearnerSession,
    ) -> Result<Self> {
        let mapping = session.result()?;
        Ok(Self {
            run_id: run_id.into(),
            participant: participant.into(),
            condition,
            init_mode: session.init_mode(),
            status: session.status(),
            steps: session.steps_to_convergence().expect("finished session"),
            mapping,
            log: None,
            session: Some(session),
        })
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn events(&self) -> &[FeedbackEvent] {
        self.session.as_ref().map_or(&[], |s| s.events())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortResult {
    pub grid: ParameterGrid,
    pub states: StateSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelMapping>,
    pub runs: Vec<RunRecord>,
}

impl CohortResult {
    pub fn new(grid: ParameterGrid, states: StateSet, levels: Option<LevelMapping>) -> Self {
        Self {
            grid,
            states,
            levels,
            runs: Vec::new(),
        }
    }

    /// Appends the runs of `other`; both must share grid and states.
    pub fn merge(&mut self, other: CohortResult) -> Result<()> {
        if self.grid != other.grid || !self.states.same_members(&other.states) {
            return Err(Error::MixedGrids);
        }
        if self.levels.is_none() {
            self.levels = other.levels;
        }
        self.runs.extend(other.runs);
        Ok(())
    }

    pub fn steps(&self, mode: InitMode, condition: Option<Condition>) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.init_mode == mode && condition.is_none_or(|c| r.condition == c))
            .map(|r| f64::from(r.steps))
            .collect()
    }

    pub fn modes(&self) -> Vec<InitMode> {
        let mut m: Vec<InitMode> = self.runs.iter().map(|r| r.init_mode).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Writes `runs/<run_id>.jsonl` for every run that carries a session,
    /// then `cohort.json`.
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        for run in &mut self.runs {
            if let Some(session) = &run.session {
                let rel = format!("{RUNS_DIR}/{}.jsonl", run.run_id);
                write_learner_log(&dir.join(&rel), session)?;
                run.log = Some(rel);
            }
        }
        write_json_atomic(&dir.join(COHORT_FILE), self)
    }

    /// Reads `cohort.json` and rebuilds each logged run by replay, checking
    /// the replayed mapping against the recorded one.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(COHORT_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cohort: CohortResult = serde_json::from_str(&text)?;
        for run in &mut cohort.runs {
            let Some(rel) = &run.log else { continue };
            let contents = read_jsonl(&dir.join(rel))?;
            if let Some(t) = contents.truncated {
                return Err(Error::BadRecord {
                    line: t.line,
                    message: format!("{rel}: truncated record"),
                });
            }
            let session = replay_learner(&contents.records)?;
            if session.config().grid != cohort.grid {
                return Err(Error::MixedGrids);
            }
            if session.result()? != run.mapping || session.steps_to_convergence() != Some(run.steps) {
                return Err(Error::ReplayDivergence {
                    line: contents.records.len(),
                    message: format!("{rel}: replay disagrees with {COHORT_FILE}"),
                });
            }
            run.session = Some(session);
        }
        Ok(cohort)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepsSummary {
    pub runs: usize,
    pub converged: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl StepsSummary {
    pub fn of(steps: &[f64], converged: usize) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyCohort);
        }
        let mut sorted = steps.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Ok(Self {
            runs: n,
            converged,
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

pub fn steps_summary(cohort: &CohortResult) -> Result<BTreeMap<InitMode, StepsSummary>> {
    if cohort.runs.is_empty() {
        return Err(Error::EmptyCohort);
    }
    cohort
        .modes()
        .into_iter()
        .map(|mode| {
            let converged = cohort.runs.iter().filter(|r| r.init_mode == mode && r.converged()).count();
            Ok((mode, StepsSummary::of(&cohort.steps(mode, None), converged)?))
        })
        .collect()
}
