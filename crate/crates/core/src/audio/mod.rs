//! Audio decoding and shaping: WAV input, resampling, duration fixing.

mod resample;
mod wav;

pub use resample::resample;
pub use wav::{decode_wav_bytes, load_wav, write_wav_pcm16};

use thiserror::Error;

/// Errors from decoding or validating audio.
#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed container: {0}")]
    MalformedContainer(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("truncated data: {0}")]
    TruncatedData(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Mono audio in [-1, 1] at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Wraps samples after checking the clip invariants: a positive sample
    /// rate and every sample finite and within [-1, 1].
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(&bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(AudioError::InvalidClip(format!(
                "sample {bad} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Forces the clip to exactly `round(duration_s * sample_rate)` samples
    /// by truncating or zero-padding at the end.
    pub fn fix_length(&self, duration_s: f64) -> AudioClip {
        let target = (duration_s * self.sample_rate as f64).round() as usize;
        let mut samples = self.samples.clone();
        samples.resize(target, 0.0);
        AudioClip {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}
