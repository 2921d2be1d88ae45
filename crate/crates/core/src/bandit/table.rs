use rand::Rng;
use serde::{Deserialize, Serialize};

use super::math::uncertainty;
use crate::error::Result;
use crate::grid::ActionId;

/// How actions that have never been updated are ordered against each other.
///
/// Their exploration bonus is infinite, so they always outrank visited
/// actions. Among themselves `ByValue` still compares the current Q (so
/// informed priors decide the visiting order), while `Uniform` treats them
/// all as tied, which is plain IEEE `q + inf`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnvisitedOrder {
    #[default]
    ByValue,
    Uniform,
}

/// Per-state action values, visit counts and convergence bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub state: String,
    pub q: Vec<f64>,
    pub n: Vec<u32>,
    /// Consecutive qualifying trials for this state.
    pub f: u32,
    /// Action most recently selected for this state.
    pub last_action: Option<ActionId>,
    pub last_delta_q: Option<f64>,
    pub converged: bool,
    pub converged_action: Option<ActionId>,
}

impl QTable {
    pub fn new(state: impl Into<String>, initial: Vec<f64>) -> Self {
        let len = initial.len();
        Self {
            state: state.into(),
            q: initial,
            n: vec![0; len],
            f: 0,
            last_action: None,
            last_delta_q: None,
            converged: false,
            converged_action: None,
        }
    }

    pub fn action_count(&self) -> usize {
        self.q.len()
    }

    pub fn total_visits(&self) -> u64 {
        self.n.iter().map(|&n| u64::from(n)).sum()
    }

    /// Highest-valued action, lowest index on ties.
    pub fn argmax(&self) -> ActionId {
        let mut best = 0;
        for (i, &q) in self.q.iter().enumerate() {
            if q > self.q[best] {
                best = i;
            }
        }
        ActionId::from_index(best)
    }

    /// UCB score of every action at iteration `t`.
    pub fn scores(&self, t: u32, z: f64) -> Result<Vec<f64>> {
        self.q
            .iter()
            .zip(&self.n)
            .map(|(&q, &n)| Ok(q + uncertainty(n, t, z)?))
            .collect()
    }

    /// Actions sharing the maximal `q + U` score.
    pub fn best_actions(&self, t: u32, z: f64, order: UnvisitedOrder) -> Result<Vec<ActionId>> {
        // (unvisited, finite value) compared lexicographically
        let mut keyed = Vec::with_capacity(self.q.len());
        for (&q, &n) in self.q.iter().zip(&self.n) {
            let u = uncertainty(n, t, z)?;
            let key = if u.is_infinite() {
                match order {
                    UnvisitedOrder::ByValue => (true, q),
                    UnvisitedOrder::Uniform => (true, 0.0),
                }
            } else {
                (false, q + u)
            };
            keyed.push(key);
        }
        let best = keyed
            .iter()
            .copied()
            .fold(None::<(bool, f64)>, |acc, k| match acc {
                None => Some(k),
                Some(b) if k.0 > b.0 || (k.0 == b.0 && k.1 > b.1) => Some(k),
                Some(b) => Some(b),
            })
            .expect("table has at least one action");
        Ok(keyed
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == best)
            .map(|(i, _)| ActionId::from_index(i))
            .collect())
    }
}

/// UCB1 action choice; ties are broken uniformly at random.
pub fn select_action<R: Rng + ?Sized>(
    table: &QTable,
    t: u32,
    z: f64,
    order: UnvisitedOrder,
    rng: &mut R,
) -> Result<ActionId> {
    let best = table.best_actions(t, z, order)?;
    Ok(if best.len() == 1 {
        best[0]
    } else {
        best[rng.random_range(0..best.len())]
    })
}
