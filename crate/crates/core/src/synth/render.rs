//! Loop rendering: place the base sample on every beat, bend the pitch with a
//! time-varying playback rate, then peak-normalize.
//!
//! The loop length is fixed by tempo and beat count (`bpl * 60 / bpm` seconds)
//! and the bend never changes it: the read head runs faster or slower than the
//! write head, reading silence past the end when bending up and leaving the
//! tail unread when bending down.

use serde::{Deserialize, Serialize};

use super::levels::AcousticParams;
use super::sample::BaseSample;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub sample_rate: u32,
    pub bits_per_sample: u16,
    /// Target peak in dBFS.
    pub peak_dbfs: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44_100,
            bits_per_sample: 16,
            peak_dbfs: -1.0,
        }
    }
}

impl RenderConfig {
    pub fn peak_linear(&self) -> f64 {
        10f64.powf(self.peak_dbfs / 20.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        if self.bits_per_sample != 16 {
            return Err(Error::InvalidConfig("only 16-bit output is supported".into()));
        }
        if !(self.peak_dbfs <= 0.0 && self.peak_dbfs.is_finite()) {
            return Err(Error::InvalidConfig("peak_dbfs must be <= 0".into()));
        }
        Ok(())
    }
}

/// Samples in one loop.
pub fn loop_len(params: &AcousticParams, sample_rate: u32) -> usize {
    (f64::from(params.bpl) * 60.0 / params.bpm * f64::from(sample_rate)).round() as usize
}

/// Start sample of beat `k`.
pub fn beat_offset(k: u32, bpm: f64, sample_rate: u32) -> usize {
    (f64::from(k) * 60.0 / bpm * f64::from(sample_rate)).round() as usize
}

/// Base sample repeated on each of the `bpl` beats, without bend or gain.
pub fn assemble_loop(base: &BaseSample, params: &AcousticParams, sample_rate: u32) -> Result<Vec<f64>> {
    if base.sample_rate != sample_rate {
        return Err(Error::InvalidSample(format!(
            "base sample is {} Hz, render rate is {} Hz",
            base.sample_rate, sample_rate
        )));
    }
    if !(params.bpm > 0.0) || params.bpl == 0 {
        return Err(Error::InvalidLevels(format!("invalid params {params:?}")));
    }
    let beat_len = beat_offset(1, params.bpm, sample_rate);
    if base.pcm.len() > beat_len {
        return Err(Error::BaseTooLong {
            bpm: params.bpm,
            bpl: params.bpl,
            base_len: base.pcm.len(),
            beat_len,
        });
    }
    let len = loop_len(params, sample_rate);
    let mut out = vec![0.0; len];
    for k in 0..params.bpl {
        let start = beat_offset(k, params.bpm, sample_rate);
        for (dst, &src) in out[start.min(len)..].iter_mut().zip(&base.pcm) {
            *dst += src;
        }
    }
    Ok(out)
}

/// Playback rate at each output sample: a linear semitone ramp from 0 at
/// the first sample to `semitones` at the last.
pub fn bend_rates(len: usize, semitones: f64) -> Vec<f64> {
    if semitones == 0.0 || len < 2 {
        return vec![1.0; len];
    }
    let last = (len - 1) as f64;
    (0..len)
        .map(|i| 2f64.powf(semitones * (i as f64 / last) / 12.0))
        .collect()
}

/// Linear interpolation at fractional position `pos`; zero outside the buffer.
pub fn interpolate(buf: &[f64], pos: f64) -> f64 {
    if pos < 0.0 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let a = buf.get(i).copied().unwrap_or(0.0);
    if frac == 0.0 {
        return a;
    }
    let b = buf.get(i + 1).copied().unwrap_or(0.0);
    a + (b - a) * frac
}

/// Variable-rate resampling along [`bend_rates`]; output length equals input.
pub fn apply_bend(buf: &[f64], semitones: f64) -> Vec<f64> {
    if semitones == 0.0 {
        return buf.to_vec();
    }
    let mut pos = 0.0;
    bend_rates(buf.len(), semitones)
        .into_iter()
        .map(|rate| {
            let v = interpolate(buf, pos);
            pos += rate;
            v
        })
        .collect()
}

/// Scales so the largest magnitude equals `peak`. Silence is left as is.
pub fn normalize(buf: &mut [f64], peak: f64) {
    let max = buf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max > 0.0 {
        let gain = peak / max;
        buf.iter_mut().for_each(|x| *x *= gain);
    }
}

pub fn quantize(buf: &[f64]) -> Vec<i16> {
    buf.iter()
        .map(|x| (x * f64::from(i16::MAX)).round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16)
        .collect()
}

pub fn render_loop(base: &BaseSample, params: &AcousticParams, config: &RenderConfig) -> Result<Vec<f64>> {
    let assembled = assemble_loop(base, params, config.sample_rate)?;
    let mut out = apply_bend(&assembled, params.pitch_bend);
    normalize(&mut out, config.peak_linear());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(bpm: f64, bpl: u32, pitch_bend: f64) -> AcousticParams {
        AcousticParams { bpm, bpl, pitch_bend }
    }

    fn click(sr: u32) -> BaseSample {
        let mut pcm = vec![0.0; 200];
        pcm[0] = 1.0;
        pcm[1] = 0.5;
        BaseSample::new(pcm, sr).unwrap()
    }

    /// Rising edges through `thr` separated by at least `gap` samples.
    fn onsets(buf: &[f64], thr: f64, gap: usize) -> Vec<usize> {
        let mut found: Vec<usize> = Vec::new();
        for (i, x) in buf.iter().enumerate() {
            if x.abs() >= thr && found.last().is_none_or(|&l| i - l >= gap) {
                found.push(i);
            }
        }
        found
    }

    #[test]
    fn duration_examples() {
        let sr = 44_100;
        let cfg = RenderConfig::default();
        let base = BaseSample::builtin(sr);
        let out = render_loop(&base, &params(140.0, 4, 0.0), &cfg).unwrap();
        // 4 * 60 / 140 s = 1.714285.. s
        assert!((out.len() as f64 / sr as f64 - 4.0 * 60.0 / 140.0).abs() <= 1.0 / sr as f64);
        let one = render_loop(&base, &params(60.0, 1, 0.0), &cfg).unwrap();
        assert_eq!(one.len(), sr as usize);
    }

    #[test]
    fn onsets_on_beats() {
        let sr = 8_000;
        let assembled = assemble_loop(&click(sr), &params(120.0, 4, 0.0), sr).unwrap();
        assert_eq!(onsets(&assembled, 0.9, 100), vec![0, 4000, 8000, 12000]);
        let single = assemble_loop(&click(sr), &params(60.0, 1, 0.0), sr).unwrap();
        assert_eq!(onsets(&single, 0.9, 100), vec![0]);
    }

    #[test]
    fn bent_loops_keep_onset_count() {
        let sr = 8_000;
        for bend in [-4.0, 4.0] {
            for bpl in [1, 2, 4] {
                let p = params(180.0, bpl, bend);
                let out = render_loop(&click(sr), &p, &RenderConfig { sample_rate: sr, ..Default::default() }).unwrap();
                assert_eq!(out.len(), loop_len(&p, sr));
                // linear interpolation can split a click across two samples
                assert_eq!(onsets(&out, 0.3, 100).len(), bpl as usize, "bend {bend} bpl {bpl}");
            }
        }
    }

    #[test]
    fn zero_bend_is_identity() {
        let sr = 44_100;
        let base = BaseSample::builtin(sr);
        let p = params(100.0, 2, 0.0);
        let assembled = assemble_loop(&base, &p, sr).unwrap();
        assert_eq!(apply_bend(&assembled, 0.0), assembled);
        assert!(bend_rates(10, 0.0).iter().all(|&r| r == 1.0));
    }

    #[test]
    fn rate_ramp_monotone() {
        let up = bend_rates(1000, 4.0);
        assert!(up.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(up[0], 1.0);
        assert!((up[999] - 2f64.powf(4.0 / 12.0)).abs() < 1e-12);
        let down = bend_rates(1000, -4.0);
        assert!(down.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn peak_normalized() {
        let cfg = RenderConfig::default();
        let out = render_loop(&BaseSample::builtin(44_100), &params(140.0, 2, 4.0), &cfg).unwrap();
        let q = quantize(&out);
        let peak = q.iter().map(|s| i32::from(*s).abs()).max().unwrap();
        let target = (cfg.peak_linear() * 32767.0).round() as i32;
        assert!((peak - target).abs() <= 1, "peak {peak} target {target}");
    }

    #[test]
    fn overlong_base_rejected() {
        let sr = 44_100;
        let long = BaseSample::new(vec![0.1; sr as usize / 2], sr).unwrap();
        match render_loop(&long, &params(180.0, 2, 0.0), &RenderConfig::default()) {
            Err(Error::BaseTooLong { bpm, bpl, .. }) => assert_eq!((bpm, bpl), (180.0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interpolation() {
        let b = [0.0, 1.0, 3.0];
        assert_eq!(interpolate(&b, 0.5), 0.5);
        assert_eq!(interpolate(&b, 1.25), 1.5);
        assert_eq!(interpolate(&b, 2.5), 1.5);
        assert_eq!(interpolate(&b, 7.0), 0.0);
    }
}
