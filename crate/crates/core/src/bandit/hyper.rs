use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// Exploration factor.
    pub z: f64,
    /// Trial budget per learning session (all states together).
    pub budget: u32,
    /// Consecutive qualifying trials needed to converge a state.
    pub f_conv: u32,
    /// Largest |dQ| that still counts as a settled estimate.
    pub delta_q_conv: f64,
    pub q_max: f64,
    pub q_min: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            z: 0.5,
            budget: 60,
            f_conv: 3,
            delta_q_conv: 2.0,
            q_max: 10.0,
            q_min: -10.0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidHyperparameters(m.into()));
        if !(self.z > 0.0 && self.z.is_finite()) {
            return fail("z must be positive");
        }
        if self.budget == 0 {
            return fail("budget must be at least 1");
        }
        if self.f_conv == 0 {
            return fail("f_conv must be at least 1");
        }
        if !(self.delta_q_conv >= 0.0) {
            return fail("delta_q_conv must be non-negative");
        }
        if !(self.q_min < self.q_max) || !self.q_min.is_finite() || !self.q_max.is_finite() {
            return fail("q_min must be below q_max");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let hp = Hyperparameters::default();
        assert_eq!((hp.z, hp.budget, hp.f_conv, hp.delta_q_conv), (0.5, 60, 3, 2.0));
        assert_eq!((hp.q_min, hp.q_max), (-10.0, 10.0));
        hp.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = Hyperparameters::default();
        for hp in [
            Hyperparameters { z: 0.0, ..base },
            Hyperparameters { budget: 0, ..base },
            Hyperparameters { f_conv: 0, ..base },
            Hyperparameters { delta_q_conv: -1.0, ..base },
            Hyperparameters { q_min: 10.0, ..base },
        ] {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
    }

    #[test]
    fn partial_toml_like_json_fills_defaults() {
        let hp: Hyperparameters = serde_json::from_str(r#"{"budget": 30}"#).unwrap();
        assert_eq!(hp.budget, 30);
        assert_eq!(hp.z, 0.5);
    }
}
