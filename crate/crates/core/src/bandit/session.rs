//! One learning run: a Q-table per robot state, driven by strict
//! trial -> feedback alternation.
//!
//! Every piece of randomness (state scheduling and tie-breaking) comes from a
//! single ChaCha stream seeded from the config, so a run is fully determined by
//! its config and the sequence of responses fed to it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hyper::Hyperparameters;
use super::math::{compute_reward, update_q, validate_confidence};
use super::priors::Priors;
use super::table::{select_action, QTable, UnvisitedOrder};
use crate::error::{Error, Result};
use crate::grid::{ActionId, ParameterGrid};
use crate::states::StateSet;

/// How the next target state is picked among unconverged states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    #[default]
    UniformRandom,
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Uninformed,
    Informed,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Uninformed => "uninformed",
            InitMode::Informed => "informed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Initialization {
    /// Every Q starts at `q_max`.
    Uninformed,
    Informed { priors: Priors },
}

impl Initialization {
    pub fn mode(&self) -> InitMode {
        match self {
            Initialization::Uninformed => InitMode::Uninformed,
            Initialization::Informed { .. } => InitMode::Informed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub grid: ParameterGrid,
    pub states: StateSet,
    /// Answers a user may give that have no Q-table of their own. Used by
    /// sessions that learn a subset of the states a user can name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_responses: Vec<String>,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub unvisited: UnvisitedOrder,
    pub seed: u64,
    pub init: Initialization,
}

impl LearnerConfig {
    pub fn new(grid: ParameterGrid, states: StateSet, seed: u64, init: Initialization) -> Self {
        Self {
            grid,
            states,
            extra_responses: Vec::new(),
            hyperparameters: Hyperparameters::default(),
            schedule: Schedule::default(),
            unvisited: UnvisitedOrder::default(),
            seed,
            init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let hp = &self.hyperparameters;
        hp.validate()?;
        for (i, r) in self.extra_responses.iter().enumerate() {
            if self.states.contains(r) || self.extra_responses[..i].contains(r) {
                return Err(Error::InvalidStates(format!("duplicate response `{r}`")));
            }
        }
        if let Initialization::Informed { priors } = &self.init {
            priors.validate(&self.states, self.grid.action_count(), hp.q_min, hp.q_max)?;
        }
        Ok(())
    }

    pub fn is_response(&self, name: &str) -> bool {
        self.states.contains(name) || self.extra_responses.iter().any(|r| r == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Converged,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingTrial {
    pub iteration: u32,
    pub state: String,
    pub action: ActionId,
}

/// One applied response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub session_id: String,
    pub iteration: u32,
    pub s_real: String,
    pub action: ActionId,
    pub s_infer: String,
    pub confidence: f64,
    #[serde(default)]
    pub replay_count: u32,
    /// Unix milliseconds; absent for simulated runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

/// What a participant (or simulated user) answered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub s_infer: String,
    pub confidence: f64,
    #[serde(default)]
    pub replay_count: u32,
    #[serde(default)]
    pub timestamp_ms: Option<u64>,
}

impl Response {
    pub fn new(s_infer: impl Into<String>, confidence: f64) -> Self {
        Self {
            s_infer: s_infer.into(),
            confidence,
            replay_count: 0,
            timestamp_ms: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub iteration: u32,
    pub state: String,
    pub action: ActionId,
    pub s_check: i8,
    pub reward: f64,
    /// `q_new - q_old` at the played action, per table in state order.
    pub q_deltas: Vec<f64>,
    pub f: u32,
    pub newly_converged: bool,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAction {
    pub state: String,
    pub action: ActionId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerSession {
    id: String,
    config: LearnerConfig,
    tables: Vec<QTable>,
    t: u32,
    status: Status,
    pending: Option<PendingTrial>,
    rng: ChaCha8Rng,
    rr_cursor: usize,
    events: Vec<FeedbackEvent>,
    steps_to_convergence: Option<u32>,
}

impl LearnerSession {
    pub fn new(id: impl Into<String>, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let count = config.grid.action_count();
        let q_max = config.hyperparameters.q_max;
        let tables = config
            .states
            .names()
            .iter()
            .map(|s| {
                let init = match &config.init {
                    Initialization::Uninformed => vec![q_max; count],
                    Initialization::Informed { priors } => priors.get(s).expect("validated").to_vec(),
                };
                QTable::new(s.clone(), init)
            })
            .collect();
        Ok(Self {
            id: id.into(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            tables,
            t: 0,
            status: Status::Running,
            pending: None,
            rr_cursor: 0,
            events: Vec::new(),
            steps_to_convergence: None,
        })
    }

    /// Optimistic start: every Q at `q_max`.
    pub fn uninformed(
        id: impl Into<String>,
        grid: ParameterGrid,
        states: StateSet,
        hp: Hyperparameters,
        seed: u64,
    ) -> Result<Self> {
        let mut config = LearnerConfig::new(grid, states, seed, Initialization::Uninformed);
        config.hyperparameters = hp;
        Self::new(id, config)
    }

    pub fn informed(
        id: impl Into<String>,
        grid: ParameterGrid,
        states: StateSet,
        hp: Hyperparameters,
        priors: Priors,
        seed: u64,
    ) -> Result<Self> {
        let mut config = LearnerConfig::new(grid, states, seed, Initialization::Informed { priors });
        config.hyperparameters = hp;
        Self::new(id, config)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn tables(&self) -> &[QTable] {
        &self.tables
    }

    pub fn table(&self, state: &str) -> Option<&QTable> {
        self.config.states.index_of(state).map(|i| &self.tables[i])
    }

    /// Global iteration counter.
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn pending(&self) -> Option<&PendingTrial> {
        self.pending.as_ref()
    }

    pub fn events(&self) -> &[FeedbackEvent] {
        &self.events
    }

    pub fn init_mode(&self) -> InitMode {
        self.config.init.mode()
    }

    /// Trials applied when the session stopped running.
    pub fn steps_to_convergence(&self) -> Option<u32> {
        self.steps_to_convergence
    }

    pub fn converged_count(&self) -> usize {
        self.tables.iter().filter(|t| t.converged).count()
    }

    /// Picks the next target state and the sound to play for it.
    pub fn next_trial(&mut self) -> Result<PendingTrial> {
        if self.status != Status::Running {
            return Err(Error::SessionComplete);
        }
        if self.pending.is_some() {
            return Err(Error::TrialPending);
        }
        let open: Vec<usize> = (0..self.tables.len()).filter(|&i| !self.tables[i].converged).collect();
        if open.is_empty() {
            return Err(Error::SessionComplete);
        }
        let target = match self.config.schedule {
            Schedule::UniformRandom => open[self.rng.random_range(0..open.len())],
            Schedule::RoundRobin => {
                let count = self.tables.len();
                let pick = (0..count)
                    .map(|k| (self.rr_cursor + k) % count)
                    .find(|i| !self.tables[*i].converged)
                    .expect("at least one open state");
                self.rr_cursor = (pick + 1) % count;
                pick
            }
        };
        self.t += 1;
        let hp = self.config.hyperparameters;
        let table = &mut self.tables[target];
        let action = select_action(table, self.t, hp.z, self.config.unvisited, &mut self.rng)?;
        table.n[action.index()] += 1;
        let pending = PendingTrial {
            iteration: self.t,
            state: table.state.clone(),
            action,
        };
        self.pending = Some(pending.clone());
        Ok(pending)
    }

    /// Applies a response to the pending trial.
    pub fn answer(&mut self, response: Response) -> Result<TrialOutcome> {
        let pending = self.pending.as_ref().ok_or(Error::NoPendingTrial)?;
        let event = FeedbackEvent {
            session_id: self.id.clone(),
            iteration: pending.iteration,
            s_real: pending.state.clone(),
            action: pending.action,
            s_infer: response.s_infer,
            confidence: response.confidence,
            replay_count: response.replay_count,
            timestamp_ms: response.timestamp_ms,
        };
        self.apply_feedback(event)
    }

    pub fn apply_feedback(&mut self, event: FeedbackEvent) -> Result<TrialOutcome> {
        let pending = self.pending.clone().ok_or(Error::NoPendingTrial)?;
        if event.s_real != pending.state || event.action != pending.action || event.iteration != pending.iteration {
            return Err(Error::TrialMismatch(format!(
                "expected ({}, action {}, t={}), got ({}, action {}, t={})",
                pending.state, pending.action, pending.iteration, event.s_real, event.action, event.iteration
            )));
        }
        validate_confidence(event.confidence)?;
        if !self.config.is_response(&event.s_infer) {
            return Err(Error::UnknownState(event.s_infer.clone()));
        }

        let hp = self.config.hyperparameters;
        let a = pending.action.index();
        let target = self.config.states.require(&pending.state)?;
        let reward = compute_reward(&event.s_real, &event.s_infer, event.confidence)?;

        // Reward propagation: the inferred state's table is pushed up, all
        // others down, all at the played action.
        let mut q_deltas = Vec::with_capacity(self.tables.len());
        for (i, table) in self.tables.iter_mut().enumerate() {
            if i != target {
                table.n[a] += 1;
            }
            let r = if table.state == event.s_infer {
                event.confidence
            } else {
                -event.confidence
            };
            let old = table.q[a];
            let new = update_q(old, table.n[a], r)?;
            table.q[a] = new;
            q_deltas.push(new - old);
        }

        let correct = reward.s_check > 0;
        let table = &mut self.tables[target];
        let delta_q = q_deltas[target].abs();
        table.last_delta_q = Some(delta_q);
        let repeated = table.last_action == Some(pending.action);
        if correct && (repeated || delta_q <= hp.delta_q_conv) {
            table.f = (table.f + 1).min(hp.f_conv);
        } else {
            table.f = 0;
        }
        table.last_action = Some(pending.action);
        let mut newly_converged = false;
        if !table.converged && table.f >= hp.f_conv {
            table.converged = true;
            table.converged_action = Some(pending.action);
            newly_converged = true;
        }
        let f = table.f;

        if self.tables.iter().all(|t| t.converged) {
            self.status = Status::Converged;
        } else if self.t >= hp.budget {
            for table in self.tables.iter_mut().filter(|t| !t.converged) {
                table.converged_action = Some(table.argmax());
            }
            self.status = Status::BudgetExhausted;
        }
        if self.status != Status::Running {
            self.steps_to_convergence = Some(self.t);
        }

        self.pending = None;
        self.events.push(event);
        Ok(TrialOutcome {
            iteration: self.t,
            state: pending.state,
            action: pending.action,
            s_check: reward.s_check,
            reward: reward.reward,
            q_deltas,
            f,
            newly_converged,
            status: self.status,
        })
    }

    /// Final sound per state, in state order.
    pub fn result(&self) -> Result<Vec<StateAction>> {
        if self.status == Status::Running {
            return Err(Error::SessionRunning);
        }
        Ok(self
            .tables
            .iter()
            .map(|t| StateAction {
                state: t.state.clone(),
                action: t.converged_action.expect("finished sessions assign every state"),
            })
            .collect())
    }
}
