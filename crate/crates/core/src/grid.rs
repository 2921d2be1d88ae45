//! Discretized parameter space. Each cell of the grid is one action (one sound).
//!
//! Actions are addressed by a flat mixed-radix index with the first parameter
//! most significant, so on a 3x3x3 grid the levels `[1, 2, 0]` live at
//! `1*9 + 2*3 + 0 = 15`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One discretized parameter: a name plus its ordered level labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub levels: Vec<String>,
}

impl Parameter {
    pub fn new<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}

/// Flat index of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }

    /// For indices already bounded by a table or grid.
    pub(crate) fn from_index(index: usize) -> Self {
        Self(index)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct ParameterGrid {
    parameters: Vec<Parameter>,
    action_count: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    parameters: Vec<Parameter>,
}

impl TryFrom<RawGrid> for ParameterGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        ParameterGrid::new(raw.parameters)
    }
}

impl From<ParameterGrid> for RawGrid {
    fn from(grid: ParameterGrid) -> Self {
        RawGrid {
            parameters: grid.parameters,
        }
    }
}

impl ParameterGrid {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::InvalidGrid("no parameters".into()));
        }
        let mut seen = HashSet::new();
        for p in &parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidGrid(format!("duplicate parameter `{}`", p.name)));
            }
            if p.levels.len() < 2 {
                return Err(Error::InvalidGrid(format!(
                    "parameter `{}` has {} level(s), need at least 2",
                    p.name,
                    p.levels.len()
                )));
            }
        }
        let action_count = parameters
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.levels.len()))
            .ok_or_else(|| Error::InvalidGrid("action count overflows".into()))?;
        Ok(Self {
            parameters,
            action_count,
        })
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Level count per parameter, in parameter order.
    pub fn radices(&self) -> Vec<usize> {
        self.parameters.iter().map(|p| p.levels.len()).collect()
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    pub fn encode(&self, levels: &[usize]) -> Result<ActionId> {
        if levels.len() != self.parameters.len() {
            return Err(Error::LevelArity {
                expected: self.parameters.len(),
                got: levels.len(),
            });
        }
        let mut flat = 0usize;
        for (p, &idx) in self.parameters.iter().zip(levels) {
            if idx >= p.levels.len() {
                return Err(Error::LevelOutOfRange {
                    parameter: p.name.clone(),
                    index: idx,
                    levels: p.levels.len(),
                });
            }
            flat = flat * p.levels.len() + idx;
        }
        Ok(ActionId(flat))
    }

    /// Validates a flat index.
    pub fn action(&self, flat: usize) -> Result<ActionId> {
        if flat >= self.action_count {
            return Err(Error::ActionOutOfRange {
                index: flat,
                count: self.action_count,
            });
        }
        Ok(ActionId(flat))
    }

    pub fn levels(&self, action: ActionId) -> Vec<usize> {
        let mut rest = action.0;
        let mut out = vec![0; self.parameters.len()];
        for (slot, p) in out.iter_mut().zip(&self.parameters).rev() {
            let radix = p.levels.len();
            *slot = rest % radix;
            rest /= radix;
        }
        out
    }

    pub fn decode(&self, flat: usize) -> Result<Vec<usize>> {
        self.action(flat).map(|a| self.levels(a))
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.action_count).map(ActionId)
    }

    /// Human-readable label such as `bpm=140 bpl=4 pitch=-4`.
    pub fn describe(&self, action: ActionId) -> String {
        self.levels(action)
            .iter()
            .zip(&self.parameters)
            .map(|(&i, p)| format!("{}={}", p.name, p.levels[i]))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(d: usize) -> ParameterGrid {
        let levels: Vec<String> = (0..d).map(|i| i.to_string()).collect();
        ParameterGrid::new(vec![
            Parameter::new("bpm", levels.clone()),
            Parameter::new("bpl", levels.clone()),
            Parameter::new("pitch", levels),
        ])
        .unwrap()
    }

    #[test]
    fn mixed_radix_examples() {
        let g = cube(3);
        assert_eq!(g.action_count(), 27);
        assert_eq!(g.encode(&[0, 0, 0]).unwrap().index(), 0);
        assert_eq!(g.encode(&[2, 2, 2]).unwrap().index(), 26);
        assert_eq!(g.encode(&[1, 2, 0]).unwrap().index(), 15);
        assert_eq!(g.decode(15).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn uneven_radices() {
        let g = ParameterGrid::new(vec![
            Parameter::new("a", ["x", "y"]),
            Parameter::new("b", ["x", "y", "z", "w"]),
        ])
        .unwrap();
        assert_eq!(g.action_count(), 8);
        assert_eq!(g.encode(&[1, 3]).unwrap().index(), 7);
        assert_eq!(g.decode(5).unwrap(), vec![1, 1]);
    }

    #[test]
    fn out_of_range_names_parameter() {
        let g = cube(3);
        match g.encode(&[0, 3, 0]) {
            Err(Error::LevelOutOfRange { parameter, index, .. }) => {
                assert_eq!(parameter, "bpl");
                assert_eq!(index, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(g.decode(27), Err(Error::ActionOutOfRange { .. })));
        assert!(matches!(g.encode(&[0, 0]), Err(Error::LevelArity { .. })));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(ParameterGrid::new(vec![]).is_err());
        assert!(ParameterGrid::new(vec![Parameter::new("a", ["only"])]).is_err());
        assert!(ParameterGrid::new(vec![
            Parameter::new("a", ["x", "y"]),
            Parameter::new("a", ["x", "y"]),
        ])
        .is_err());
    }

    #[test]
    fn serde_validates() {
        let g = cube(2);
        let json = serde_json::to_string(&g).unwrap();
        let back: ParameterGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"parameters":[{"name":"a","levels":["x"]}]}"#;
        assert!(serde_json::from_str::<ParameterGrid>(bad).is_err());
    }

    proptest::proptest! {
        #[test]
        fn encode_decode_round_trip(radices in proptest::collection::vec(2usize..6, 1..5), seed in 0usize..10_000) {
            let params = radices
                .iter()
                .enumerate()
                .map(|(i, &d)| Parameter::new(format!("p{i}"), (0..d).map(|l| l.to_string())))
                .collect();
            let g = ParameterGrid::new(params).unwrap();
            let flat = seed % g.action_count();
            let levels = g.decode(flat).unwrap();
            proptest::prop_assert_eq!(g.encode(&levels).unwrap().index(), flat);
        }
    }
}
