use std::path::Path;

use crate::error::{Error, Result};

/// Mono source sound placed on every beat of a loop.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseSample {
    /// Samples in [-1, 1].
    pub pcm: Vec<f64>,
    pub sample_rate: u32,
}

impl BaseSample {
    pub fn new(pcm: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if pcm.is_empty() {
            return Err(Error::InvalidSample("empty sample".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSample("sample rate must be positive".into()));
        }
        if pcm.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
            return Err(Error::InvalidSample("samples must be finite and within [-1, 1]".into()));
        }
        Ok(Self { pcm, sample_rate })
    }

    /// Built-in beep: 880 Hz sine, 120 ms, exponential decay.
    pub fn builtin(sample_rate: u32) -> Self {
        let len = (0.120 * f64::from(sample_rate)).round() as usize;
        let sr = f64::from(sample_rate);
        let pcm = (0..len)
            .map(|i| {
                let t = i as f64 / sr;
                (2.0 * std::f64::consts::PI * 880.0 * t).sin() * (-t / 0.030).exp()
            })
            .collect();
        Self { pcm, sample_rate }
    }

    pub fn duration_secs(&self) -> f64 {
        self.pcm.len() as f64 / f64::from(self.sample_rate)
    }

    /// Reads a WAV file, mixing down to mono and resampling to `sample_rate`.
    pub fn load_wav(path: &Path, sample_rate: u32) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        let channels = usize::from(spec.channels.max(1));
        let interleaved: Vec<f64> = match spec.sample_format {
            hound::SampleFormat::Float => reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()?,
            hound::SampleFormat::Int => {
                let scale = 2f64.powi(i32::from(spec.bits_per_sample) - 1);
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| f64::from(v) / scale))
                    .collect::<std::result::Result<_, _>>()?
            }
        };
        let mono: Vec<f64> = interleaved
            .chunks(channels)
            .map(|frame| (frame.iter().sum::<f64>() / frame.len() as f64).clamp(-1.0, 1.0))
            .collect();
        let pcm = if spec.sample_rate == sample_rate {
            mono
        } else {
            resample_linear(&mono, f64::from(spec.sample_rate) / f64::from(sample_rate))
        };
        Self::new(pcm, sample_rate)
    }
}

/// Constant-ratio linear-interpolation resampling; `step` input samples per
/// output sample.
fn resample_linear(input: &[f64], step: f64) -> Vec<f64> {
    if input.is_empty() {
        return Vec::new();
    }
    let out_len = ((input.len() as f64) / step).floor().max(1.0) as usize;
    (0..out_len)
        .map(|i| super::render::interpolate(input, i as f64 * step))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let b = BaseSample::builtin(44_100);
        assert_eq!(b.pcm.len(), 5292);
        assert!(b.pcm.iter().all(|x| x.abs() <= 1.0));
        assert!((b.duration_secs() - 0.12).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(BaseSample::new(vec![], 44_100).is_err());
        assert!(BaseSample::new(vec![1.5], 44_100).is_err());
        assert!(BaseSample::new(vec![0.1], 0).is_err());
    }

    #[test]
    fn wav_round_trip_and_resample() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 22_050,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..2205 {
            let v = ((i as f64 / 30.0).sin() * 16_000.0) as i16;
            w.write_sample(v).unwrap();
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let b = BaseSample::load_wav(&path, 44_100).unwrap();
        assert_eq!(b.sample_rate, 44_100);
        assert!((b.pcm.len() as i64 - 4410).abs() <= 2);
    }
}
