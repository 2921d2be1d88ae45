use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::StateSet;

/// Initial Q-values per state, each an array in flat action order.
///
/// On disk this is a JSON object: `{"Stuck": [..27 reals..], ...}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Priors(pub BTreeMap<String, Vec<f64>>);

impl Priors {
    pub fn uniform(states: &StateSet, action_count: usize, value: f64) -> Self {
        Priors(
            states
                .names()
                .iter()
                .map(|s| (s.clone(), vec![value; action_count]))
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading priors {}", path.display()), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn get(&self, state: &str) -> Option<&[f64]> {
        self.0.get(state).map(Vec::as_slice)
    }

    /// Checks that every (state, action) pair is present and within bounds.
    pub fn validate(&self, states: &StateSet, action_count: usize, q_min: f64, q_max: f64) -> Result<()> {
        if let Some(extra) = self.0.keys().find(|k| !states.contains(k)) {
            return Err(Error::InvalidPriors(format!("unknown state `{extra}`")));
        }
        let mut missing = Vec::new();
        for state in states.names() {
            match self.0.get(state) {
                None => missing.push(format!("{state}[0..{action_count}]")),
                Some(v) if v.len() < action_count => {
                    missing.push(format!("{state}[{}..{action_count}]", v.len()));
                }
                Some(v) if v.len() > action_count => {
                    return Err(Error::InvalidPriors(format!(
                        "`{state}` has {} values, expected {action_count}",
                        v.len()
                    )));
                }
                Some(_) => {}
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingPriors(missing));
        }
        for state in states.names() {
            for (action, &value) in self.0[state].iter().enumerate() {
                if !(q_min..=q_max).contains(&value) {
                    return Err(Error::PriorOutOfRange {
                        state: state.clone(),
                        action,
                        value,
                        min: q_min,
                        max: q_max,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_entries_are_listed() {
        let states = StateSet::default();
        let mut p = Priors::uniform(&states, 4, 1.0);
        p.0.remove("Stuck");
        p.0.get_mut("Progressing").unwrap().truncate(2);
        match p.validate(&states, 4, -10.0, 10.0) {
            Err(Error::MissingPriors(keys)) => {
                assert_eq!(keys, vec!["Stuck[0..4]".to_string(), "Progressing[2..4]".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let states = StateSet::default();
        let mut p = Priors::uniform(&states, 4, 1.0);
        p.0.get_mut("Accomplished").unwrap()[3] = 11.0;
        match p.validate(&states, 4, -10.0, 10.0) {
            Err(Error::PriorOutOfRange { state, action, value, .. }) => {
                assert_eq!((state.as_str(), action, value), ("Accomplished", 3, 11.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_state_rejected() {
        let states = StateSet::default();
        let mut p = Priors::uniform(&states, 2, 0.0);
        p.0.insert("Sleeping".into(), vec![0.0; 2]);
        assert!(matches!(p.validate(&states, 2, -10.0, 10.0), Err(Error::InvalidPriors(_))));
    }

    #[test]
    fn json_shape() {
        let p: Priors = serde_json::from_str(r#"{"A":[1,2],"B":[-3,4.5]}"#).unwrap();
        assert_eq!(p.get("B"), Some(&[-3.0, 4.5][..]));
    }
}
