use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ActionId, Parameter, ParameterGrid};

pub const BPM: &str = "bpm";
pub const BPL: &str = "bpl";
pub const PITCH: &str = "pitch";

/// Physical value behind one action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticParams {
    pub bpm: f64,
    pub bpl: u32,
    /// Semitones reached at the end of the loop.
    pub pitch_bend: f64,
}

/// Physical values for each level index of the three acoustic parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelMapping {
    pub bpm: Vec<f64>,
    pub bpl: Vec<u32>,
    pub pitch: Vec<f64>,
}

impl Default for LevelMapping {
    fn default() -> Self {
        Self {
            bpm: vec![100.0, 140.0, 180.0],
            bpl: vec![1, 2, 4],
            pitch: vec![-4.0, 0.0, 4.0],
        }
    }
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl LevelMapping {
    /// Evenly spreads `counts = [bpm, bpl, pitch]` levels over the default
    /// ranges (100..180 BPM, 1..4 beats geometric, -4..+4 semitones).
    pub fn with_counts(counts: [usize; 3]) -> Result<Self> {
        if counts.iter().any(|&d| d < 2) {
            return Err(Error::InvalidLevels("every parameter needs at least 2 levels".into()));
        }
        let frac = |i: usize, d: usize| i as f64 / (d - 1) as f64;
        let mapping = Self {
            bpm: (0..counts[0]).map(|i| 100.0 + 80.0 * frac(i, counts[0])).collect(),
            bpl: (0..counts[1]).map(|i| 4f64.powf(frac(i, counts[1])).round() as u32).collect(),
            pitch: (0..counts[2]).map(|i| -4.0 + 8.0 * frac(i, counts[2])).collect(),
        };
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidLevels(m));
        if self.bpm.len() < 2 || self.bpl.len() < 2 || self.pitch.len() < 2 {
            return fail("every parameter needs at least 2 levels".into());
        }
        if self.bpm.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return fail("bpm values must be positive".into());
        }
        if self.bpl.contains(&0) {
            return fail("bpl values must be at least 1".into());
        }
        if self.pitch.iter().any(|p| !p.is_finite()) {
            return fail("pitch values must be finite".into());
        }
        if !strictly_increasing(&self.bpm) {
            return fail(format!("bpm levels not strictly increasing: {:?}", self.bpm));
        }
        if !strictly_increasing(&self.bpl) {
            return fail(format!("bpl levels not strictly increasing: {:?}", self.bpl));
        }
        if !strictly_increasing(&self.pitch) {
            return fail(format!("pitch levels not strictly increasing: {:?}", self.pitch));
        }
        Ok(())
    }

    /// The `[bpm, bpl, pitch]` grid whose level labels are these values.
    pub fn grid(&self) -> Result<ParameterGrid> {
        self.validate()?;
        ParameterGrid::new(vec![
            Parameter::new(BPM, self.bpm.iter().map(|v| format_number(*v))),
            Parameter::new(BPL, self.bpl.iter().map(|v| v.to_string())),
            Parameter::new(PITCH, self.pitch.iter().map(|v| format_signed(*v))),
        ])
    }

    pub fn params(&self, grid: &ParameterGrid, action: ActionId) -> AcousticParams {
        let l = grid.levels(action);
        AcousticParams {
            bpm: self.bpm[l[0]],
            bpl: self.bpl[l[1]],
            pitch_bend: self.pitch[l[2]],
        }
    }

    /// Whether `grid` is the acoustic grid of this mapping.
    pub fn matches(&self, grid: &ParameterGrid) -> bool {
        self.grid().map(|g| &g == grid).unwrap_or(false)
    }

    pub fn max_bpm(&self) -> f64 {
        self.bpm.iter().copied().fold(f64::MIN, f64::max)
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

fn format_signed(v: f64) -> String {
    if v > 0.0 {
        format!("+{}", format_number(v))
    } else {
        format_number(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mapping() {
        let m = LevelMapping::default();
        assert_eq!(m.bpm[1], 140.0);
        let g = m.grid().unwrap();
        assert_eq!(g.action_count(), 27);
        assert_eq!(g.parameters()[2].levels, ["-4", "0", "+4"]);
        let p = m.params(&g, g.encode(&[1, 2, 0]).unwrap());
        assert_eq!(p, AcousticParams { bpm: 140.0, bpl: 4, pitch_bend: -4.0 });
    }

    #[test]
    fn counts_reproduce_defaults() {
        assert_eq!(LevelMapping::with_counts([3, 3, 3]).unwrap(), LevelMapping::default());
        let two = LevelMapping::with_counts([2, 2, 2]).unwrap();
        assert_eq!(two.bpl, vec![1, 4]);
        assert_eq!(two.grid().unwrap().action_count(), 8);
    }

    #[test]
    fn rejects_non_monotone() {
        let m = LevelMapping {
            bpm: vec![140.0, 100.0],
            ..LevelMapping::default()
        };
        assert!(m.validate().is_err());
        // too many bpl levels collide after rounding
        assert!(LevelMapping::with_counts([3, 9, 3]).is_err());
    }
}
