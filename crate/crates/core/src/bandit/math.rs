use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONFIDENCE_MIN: f64 = 0.0;
pub const CONFIDENCE_MAX: f64 = 10.0;

/// UCB1 exploration bonus `z * sqrt(2 ln t / n)`.
///
/// An action that has never been updated (`n == 0`) gets `+inf`.
pub fn uncertainty(n: u32, t: u32, z: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::ZeroIteration);
    }
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(z * (2.0 * f64::from(t).ln() / f64::from(n)).sqrt())
}

pub fn validate_confidence(confidence: f64) -> Result<()> {
    if !(CONFIDENCE_MIN..=CONFIDENCE_MAX).contains(&confidence) {
        return Err(Error::InvalidConfidence(confidence));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardUpdate {
    /// `+1` for a correct inference, `-1` otherwise.
    pub s_check: i8,
    pub reward: f64,
}

pub fn compute_reward(s_real: &str, s_infer: &str, confidence: f64) -> Result<RewardUpdate> {
    validate_confidence(confidence)?;
    let s_check: i8 = if s_real == s_infer { 1 } else { -1 };
    Ok(RewardUpdate {
        s_check,
        reward: f64::from(s_check) * confidence,
    })
}

/// Incremental mean: `(1 - 1/n) * q + (1/n) * r`. `n` is the count after
/// it has been incremented for this update.
pub fn update_q(q_old: f64, n: u32, reward: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    let step = 1.0 / f64::from(n);
    Ok((1.0 - step) * q_old + step * reward)
}
