//! Simulated participants that answer trials from a fixed sound -> state
//! association with uniform confusion noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::Priors;
use crate::error::{Error, Result};
use crate::grid::{ActionId, ParameterGrid};
use crate::states::{StateSet, ACCOMPLISHED, PROGRESSING, STUCK};
use crate::synth::{LevelMapping, BPL, PITCH};

/// Which state a user hears in each sound, and how strongly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthMap {
    /// Preferred state per action, flat-index order.
    pub preferred: Vec<String>,
    /// Association strength in [0, 1] per action.
    pub affinity: Vec<f64>,
}

impl GroundTruthMap {
    pub fn validate(&self, states: &StateSet, action_count: usize) -> Result<()> {
        if self.preferred.len() != action_count || self.affinity.len() != action_count {
            return Err(Error::InvalidConfig(format!(
                "ground truth covers {} actions, grid has {action_count}",
                self.preferred.len()
            )));
        }
        if let Some(s) = self.preferred.iter().find(|s| !states.contains(s)) {
            return Err(Error::UnknownState(s.clone()));
        }
        if self.affinity.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig("affinity outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn preferred_state(&self, action: ActionId) -> &str {
        &self.preferred[action.index()]
    }

    pub fn actions_for<'a>(&'a self, state: &'a str) -> impl Iterator<Item = ActionId> + 'a {
        self.preferred
            .iter()
            .enumerate()
            .filter(move |(_, s)| *s == state)
            .map(|(i, _)| ActionId::from_index(i))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ConfidenceModel {
    Fixed {
        value: f64,
    },
    /// `10 * affinity`, rounded to one decimal.
    #[default]
    AffinityScaled,
}

#[derive(Clone, Debug)]
pub struct SimulatedUser {
    truth: GroundTruthMap,
    states: StateSet,
    error_rate: f64,
    confidence: ConfidenceModel,
    rng: ChaCha8Rng,
}

impl SimulatedUser {
    pub fn new(
        truth: GroundTruthMap,
        states: StateSet,
        error_rate: f64,
        confidence: ConfidenceModel,
        seed: u64,
    ) -> Result<Self> {
        truth.validate(&states, truth.preferred.len())?;
        if !(0.0..1.0).contains(&error_rate) {
            return Err(Error::InvalidConfig(format!("error rate {error_rate} outside [0, 1)")));
        }
        if error_rate > 0.0 && states.len() < 2 {
            return Err(Error::InvalidConfig("noisy users need at least 2 states".into()));
        }
        if let ConfidenceModel::Fixed { value } = confidence {
            crate::bandit::validate_confidence(value)?;
        }
        Ok(Self {
            truth,
            states,
            error_rate,
            confidence,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn truth(&self) -> &GroundTruthMap {
        &self.truth
    }

    pub fn states(&self) -> &StateSet {
        &self.states
    }

    /// Inferred state and confidence for a played sound. The user never sees
    /// which state the robot was actually in.
    pub fn respond(&mut self, action: ActionId) -> (String, f64) {
        let preferred = self.truth.preferred_state(action);
        let state = if self.rng.random::<f64>() < self.error_rate {
            let others: Vec<&String> = self.states.names().iter().filter(|s| *s != preferred).collect();
            others[self.rng.random_range(0..others.len())].clone()
        } else {
            preferred.to_string()
        };
        let confidence = match self.confidence {
            ConfidenceModel::Fixed { value } => value,
            ConfidenceModel::AffinityScaled => (self.truth.affinity[action.index()] * 100.0).round() / 10.0,
        };
        (state, confidence)
    }
}

fn pitch_and_bpl(grid: &ParameterGrid, levels: &LevelMapping) -> Result<(usize, usize)> {
    if !levels.matches(grid) {
        return Err(Error::InvalidConfig("grid does not match the level mapping".into()));
    }
    let pitch = grid.parameter_index(PITCH).expect("acoustic grid");
    let bpl = grid.parameter_index(BPL).expect("acoustic grid");
    Ok((pitch, bpl))
}

fn require_default_states(states: &StateSet) -> Result<()> {
    if !states.same_members(&StateSet::default()) {
        return Err(Error::InvalidStates(format!(
            "pitch-dominant patterns need exactly {{{STUCK}, {ACCOMPLISHED}, {PROGRESSING}}}"
        )));
    }
    Ok(())
}

fn pitch_state(semitones: f64) -> &'static str {
    if semitones < 0.0 {
        STUCK
    } else if semitones > 0.0 {
        ACCOMPLISHED
    } else {
        PROGRESSING
    }
}

/// Downward bends read as Stuck, upward as Accomplished, flat as Progressing.
/// Stuck affinity grows with beats per loop; the other states have one
/// affinity each. Per-user levels are drawn from `rng`.
pub fn pitch_dominant_ground_truth<R: Rng + ?Sized>(
    grid: &ParameterGrid,
    levels: &LevelMapping,
    states: &StateSet,
    rng: &mut R,
) -> Result<GroundTruthMap> {
    require_default_states(states)?;
    let (pitch_ix, bpl_ix) = pitch_and_bpl(grid, levels)?;
    let bpl_top = (levels.bpl.len() - 1) as f64;
    let stuck_base = rng.random_range(0.55..=0.70);
    let accomplished = rng.random_range(0.60..=0.90);
    let progressing = rng.random_range(0.60..=0.90);
    let mut preferred = Vec::with_capacity(grid.action_count());
    let mut affinity = Vec::with_capacity(grid.action_count());
    for action in grid.actions() {
        let lv = grid.levels(action);
        let state = pitch_state(levels.pitch[lv[pitch_ix]]);
        affinity.push(match state {
            STUCK => stuck_base + 0.3 * lv[bpl_ix] as f64 / bpl_top,
            ACCOMPLISHED => accomplished,
            _ => progressing,
        });
        preferred.push(state.to_string());
    }
    Ok(GroundTruthMap { preferred, affinity })
}

/// Priors encoding the same pitch pattern: positive on each state's pitch
/// plane (rising with beats per loop for Stuck), -5 elsewhere.
pub fn pitch_dominant_priors(grid: &ParameterGrid, levels: &LevelMapping, states: &StateSet) -> Result<Priors> {
    require_default_states(states)?;
    let (pitch_ix, bpl_ix) = pitch_and_bpl(grid, levels)?;
    let bpl_top = (levels.bpl.len() - 1) as f64;
    let mut priors = Priors::uniform(states, grid.action_count(), -5.0);
    for action in grid.actions() {
        let lv = grid.levels(action);
        let state = pitch_state(levels.pitch[lv[pitch_ix]]);
        let value = if state == STUCK {
            5.0 + 3.0 * lv[bpl_ix] as f64 / bpl_top
        } else {
            7.0
        };
        priors.0.get_mut(state).expect("default states")[action.index()] = value;
    }
    Ok(priors)
}
