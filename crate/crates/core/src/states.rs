use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STUCK: &str = "Stuck";
pub const ACCOMPLISHED: &str = "Accomplished";
pub const PROGRESSING: &str = "Progressing";

/// Ordered set of robot state names. Index order is the canonical state order
/// used for Q-tables, reports and exports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StateSet(Vec<String>);

impl StateSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidStates("no states".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.trim().is_empty() {
                return Err(Error::InvalidStates("empty state name".into()));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidStates(format!("duplicate state `{n}`")));
            }
        }
        Ok(Self(names))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// True when both sets hold the same names regardless of order.
    pub fn same_members(&self, other: &StateSet) -> bool {
        self.len() == other.len() && self.0.iter().all(|n| other.contains(n))
    }
}

impl Default for StateSet {
    fn default() -> Self {
        Self(vec![STUCK.into(), ACCOMPLISHED.into(), PROGRESSING.into()])
    }
}

impl TryFrom<Vec<String>> for StateSet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        StateSet::new(v)
    }
}

impl From<StateSet> for Vec<String> {
    fn from(s: StateSet) -> Self {
        s.0
    }
}
