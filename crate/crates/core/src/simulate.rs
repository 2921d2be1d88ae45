//! Seeded cohorts of simulated participants, each running the learning
//! subtasks in a within-subject design.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{CohortResult, Condition, RunRecord};
use crate::bandit::{
    Hyperparameters, InitMode, Initialization, LearnerConfig, LearnerSession, Priors, Response, Schedule, Status,
    UnvisitedOrder,
};
use crate::error::{Error, Result};
use crate::grid::ParameterGrid;
use crate::seed::derive;
use crate::sim::{pitch_dominant_ground_truth, pitch_dominant_priors, ConfidenceModel, SimulatedUser};
use crate::states::StateSet;
use crate::synth::LevelMapping;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// Each participant gets its own seed derived from the cohort seed.
    #[default]
    Derived,
    /// Every participant reuses the cohort seed.
    Shared,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionPolicy {
    /// Even participants UI, odd IU.
    #[default]
    #[serde(rename = "alternate")]
    Alternate,
    #[serde(rename = "random")]
    Random,
    UI,
    IU,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSource {
    #[default]
    PitchDominant,
    /// JSON priors file; relative paths resolve against the config file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserConfig {
    pub error_rate: f64,
    pub confidence: ConfidenceModel,
}

impl Default for UserConfig {
    fn default() -> Self {
        Self {
            error_rate: 0.1,
            confidence: ConfidenceModel::AffinityScaled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub cohort_size: usize,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
    pub conditions: ConditionPolicy,
    pub modes: Vec<InitMode>,
    pub states: StateSet,
    pub levels: LevelMapping,
    pub hyperparameters: Hyperparameters,
    pub schedule: Schedule,
    pub unvisited: UnvisitedOrder,
    pub user: UserConfig,
    pub priors: PriorSource,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            cohort_size: 24,
            seed: 0,
            seed_policy: SeedPolicy::Derived,
            conditions: ConditionPolicy::Alternate,
            modes: vec![InitMode::Uninformed, InitMode::Informed],
            states: StateSet::default(),
            levels: LevelMapping::default(),
            hyperparameters: Hyperparameters::default(),
            schedule: Schedule::default(),
            unvisited: UnvisitedOrder::default(),
            user: UserConfig::default(),
            priors: PriorSource::default(),
        }
    }
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut config = Self::from_toml_str(&text)?;
        if let PriorSource::File { path: p } = &mut config.priors {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cohort_size == 0 {
            return Err(Error::InvalidConfig("cohort_size must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("modes must not be empty".into()));
        }
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        if modes.len() != self.modes.len() {
            return Err(Error::InvalidConfig("modes listed twice".into()));
        }
        self.levels.validate()?;
        self.hyperparameters.validate()?;
        if !(0.0..1.0).contains(&self.user.error_rate) {
            return Err(Error::InvalidConfig("user.error_rate must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<ParameterGrid> {
        self.levels.grid()
    }

    pub fn resolve_priors(&self) -> Result<Priors> {
        let grid = self.grid()?;
        let priors = match &self.priors {
            PriorSource::PitchDominant => pitch_dominant_priors(&grid, &self.levels, &self.states)?,
            PriorSource::File { path } => Priors::load(path)?,
        };
        let hp = &self.hyperparameters;
        priors.validate(&self.states, grid.action_count(), hp.q_min, hp.q_max)?;
        Ok(priors)
    }

    /// Seed for participant `index`.
    pub fn participant_seed(&self, index: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::Derived => derive(self.seed, "participant", index as u64),
            SeedPolicy::Shared => self.seed,
        }
    }

    fn condition(&self, index: usize, participant_seed: u64) -> Condition {
        match self.conditions {
            ConditionPolicy::Alternate if index % 2 == 0 => Condition::UI,
            ConditionPolicy::Alternate => Condition::IU,
            ConditionPolicy::UI => Condition::UI,
            ConditionPolicy::IU => Condition::IU,
            ConditionPolicy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive(participant_seed, "condition", 0));
                if rng.random::<bool>() {
                    Condition::UI
                } else {
                    Condition::IU
                }
            }
        }
    }
}

/// Drives `session` with `user` until it stops running.
pub fn run_to_completion(session: &mut LearnerSession, user: &mut SimulatedUser) -> Result<Status> {
    while session.status() == Status::Running {
        let trial = session.next_trial()?;
        let (s_infer, confidence) = user.respond(trial.action);
        session.answer(Response::new(s_infer, confidence))?;
    }
    Ok(session.status())
}

pub fn participant_id(index: usize) -> String {
    format!("user-{index:03}")
}

fn simulate_participant(
    config: &SimulationConfig,
    grid: &ParameterGrid,
    priors: &Priors,
    index: usize,
) -> Result<Vec<RunRecord>> {
    let seed = config.participant_seed(index);
    let mut truth_rng = ChaCha8Rng::seed_from_u64(derive(seed, "truth", 0));
    let truth = pitch_dominant_ground_truth(grid, &config.levels, &config.states, &mut truth_rng)?;
    let mut user = SimulatedUser::new(
        truth,
        config.states.clone(),
        config.user.error_rate,
        config.user.confidence,
        derive(seed, "user", 0),
    )?;
    let condition = config.condition(index, seed);
    let participant = participant_id(index);
    let mut runs = Vec::new();
    for mode in condition.order().into_iter().filter(|m| config.modes.contains(m)) {
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
        let run_id = format!("{participant}-{}", mode.as_str());
        let mut session = LearnerSession::new(run_id.clone(), lc)?;
        run_to_completion(&mut session, &mut user)?;
        runs.push(RunRecord::from_session(run_id, participant.clone(), condition, session)?);
    }
    Ok(runs)
}

/// Runs the whole cohort. Participants run in parallel; the result is
/// independent of thread count.
pub fn run_cohort(config: &SimulationConfig) -> Result<CohortResult> {
    config.validate()?;
    let grid = config.grid()?;
    let priors = if config.modes.contains(&InitMode::Informed) {
        config.resolve_priors()?
    } else {
        Priors::default()
    };
    let per_participant: Vec<Vec<RunRecord>> = (0..config.cohort_size)
        .into_par_iter()
        .map(|i| simulate_participant(config, &grid, &priors, i))
        .collect::<Result<_>>()?;
    let mut cohort = CohortResult::new(grid, config.states.clone(), Some(config.levels.clone()));
    cohort.runs = per_participant.into_iter().flatten().collect();
    Ok(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_defaults_and_overrides() {
        let c = SimulationConfig::from_toml_str(
            r#"
            cohort_size = 4
            seed = 9
            conditions = "IU"
            [user]
            error_rate = 0.2
            [hyperparameters]
            budget = 90
            [priors]
            source = "file"
            path = "p.json"
            "#,
        )
        .unwrap();
        assert_eq!(c.cohort_size, 4);
        assert_eq!(c.conditions, ConditionPolicy::IU);
        assert_eq!(c.hyperparameters.budget, 90);
        assert_eq!(c.hyperparameters.z, 0.5);
        assert_eq!(c.user.confidence, ConfidenceModel::AffinityScaled);
        assert_eq!(c.priors, PriorSource::File { path: "p.json".into() });
        assert!(SimulationConfig::from_toml_str("cohort_size = 0").is_err());
        assert!(SimulationConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn deterministic_and_ordered() {
        let config = SimulationConfig {
            cohort_size: 4,
            seed: 3,
            ..Default::default()
        };
        let a = run_cohort(&config).unwrap();
        let b = run_cohort(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 8);
        assert_eq!(a.runs[0].run_id, "user-000-uninformed");
        assert_eq!(a.runs[1].run_id, "user-000-informed");
        assert_eq!(a.runs[2].run_id, "user-001-informed");
        assert_eq!(a.runs[2].condition, Condition::IU);
        for r in &a.runs {
            assert_ne!(r.status, Status::Running);
            assert!(r.steps <= 60);
        }
    }

    #[test]
    fn shared_seed_repeats_participants() {
        let config = SimulationConfig {
            cohort_size: 2,
            seed_policy: SeedPolicy::Shared,
            conditions: ConditionPolicy::UI,
            ..Default::default()
        };
        let c = run_cohort(&config).unwrap();
        assert_eq!(c.runs[0].mapping, c.runs[2].mapping);
        assert_eq!(c.runs[0].steps, c.runs[2].steps);
    }
}
