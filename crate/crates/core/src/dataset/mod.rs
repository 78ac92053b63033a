//! Datasets: the emotion label vocabulary, corpus scanning, synthetic
//! audio generation, and persistence of features and models.

pub mod cache;
pub mod model_io;

use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::audio::AudioClip;
use crate::rng::{stream_rng, STREAM_SYNTH};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no wav files under {0}")]
    NoFiles(PathBuf),
    #[error("cannot parse an emotion label from {0}")]
    UnknownLabel(PathBuf),
}

/// The seven emotion classes, in canonical index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionLabel {
    Angry,
    Disgust,
    Fear,
    Happy,
    Neutral,
    PleasantSurprise,
    Sad,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 7] = [
        EmotionLabel::Angry,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Happy,
        EmotionLabel::Neutral,
        EmotionLabel::PleasantSurprise,
        EmotionLabel::Sad,
    ];

    pub fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|&l| l == self)
            .expect("member of ALL")
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Angry => "angry",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Happy => "happy",
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::PleasantSurprise => "pleasant_surprise",
            EmotionLabel::Sad => "sad",
        }
    }

    /// The canonical label names, for building models.
    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|l| l.name().to_string()).collect()
    }

    /// Parses one lowercased token. `ps`, `surprise`, and `surprised` are
    /// aliases for the pleasant-surprise class.
    pub fn parse_token(token: &str) -> Option<Self> {
        match token {
            "angry" => Some(EmotionLabel::Angry),
            "disgust" => Some(EmotionLabel::Disgust),
            "fear" => Some(EmotionLabel::Fear),
            "happy" => Some(EmotionLabel::Happy),
            "neutral" => Some(EmotionLabel::Neutral),
            "ps" | "surprise" | "surprised" | "pleasant_surprise" => {
                Some(EmotionLabel::PleasantSurprise)
            }
            "sad" => Some(EmotionLabel::Sad),
            _ => None,
        }
    }

    /// Label from a file stem: the final underscore-delimited token,
    /// lowercased. `OAF_back_angry` parses as angry; `YAF_dog_ps` and
    /// `..._pleasant_surprised` both land on pleasant surprise.
    pub fn from_file_stem(stem: &str) -> Option<Self> {
        let token = stem.rsplit('_').next()?.to_lowercase();
        Self::parse_token(&token)
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One labeled audio file.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: EmotionLabel,
}

/// A corpus listing in deterministic (path-sorted) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 7] {
        let mut counts = [0usize; 7];
        for e in &self.entries {
            counts[e.label.index()] += 1;
        }
        counts
    }
}

/// Recursively collects `.wav` files under `root` (extension matched
/// case-insensitively), sorted by path for scan-order independence. Every
/// file's name must parse to a label; anything else is an error rather
/// than a silent skip.
pub fn scan_corpus(root: &Path) -> Result<Manifest, DatasetError> {
    let mut files = Vec::new();
    collect_wavs(root, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(DatasetError::NoFiles(root.to_path_buf()));
    }
    let mut entries = Vec::with_capacity(files.len());
    for path in files {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| DatasetError::UnknownLabel(path.clone()))?;
        let label = EmotionLabel::from_file_stem(stem)
            .ok_or_else(|| DatasetError::UnknownLabel(path.clone()))?;
        entries.push(ManifestEntry { path, label });
    }
    Ok(Manifest { entries })
}

fn collect_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    };
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        if path.is_dir() {
            collect_wavs(&path, out)?;
        } else if path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Synthetic audio: each class is an amplitude- and frequency-modulated
/// tone plus noise at 20 dB SNR, with class-dependent carrier, vibrato,
/// and tremolo parameters:
///
/// `s(t) = (1 + 0.3 sin(2 pi r t + p1)) * sin(phi(t))`
///
/// where the instantaneous frequency `f(t) = f_c + d sin(2 pi v t + p2)`
/// is integrated into the phase,
/// `phi(t) = 2 pi f_c t - (d / v) cos(2 pi v t + p2) + p3`,
/// with `f_c = 180 + 60k` Hz, `v = 2 + k` Hz, `d = 5 + 3k` Hz, and
/// `r = 1 + k/2` Hz for class `k`. Phases are drawn per clip. Clips whose
/// peak exceeds 1 are scaled down to unit peak so they satisfy the clip
/// invariants. Output is class-major: all class-0 clips, then class 1, ...
pub fn generate_synthetic(
    n_per_class: usize,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Vec<(AudioClip, EmotionLabel)> {
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let n_samples = (duration_s * sample_rate as f64).round() as usize;
    let mut out = Vec::with_capacity(7 * n_per_class);
    for (k, &label) in EmotionLabel::ALL.iter().enumerate() {
        let carrier = 180.0 + 60.0 * k as f64;
        let vib_rate = 2.0 + k as f64;
        let vib_depth = 5.0 + 3.0 * k as f64;
        let trem_rate = 1.0 + 0.5 * k as f64;
        for _ in 0..n_per_class {
            let p1 = rng.random::<f64>() * std::f64::consts::TAU;
            let p2 = rng.random::<f64>() * std::f64::consts::TAU;
            let p3 = rng.random::<f64>() * std::f64::consts::TAU;
            let mut samples: Vec<f64> = (0..n_samples)
                .map(|i| {
                    let t = i as f64 / sample_rate as f64;
                    let trem = 1.0 + 0.3 * (std::f64::consts::TAU * trem_rate * t + p1).sin();
                    let phase = std::f64::consts::TAU * carrier * t
                        - (vib_depth / vib_rate)
                            * (std::f64::consts::TAU * vib_rate * t + p2).cos()
                        + p3;
                    trem * phase.sin()
                })
                .collect();
            // Noise at 20 dB below the clean signal's power.
            let rms = (samples.iter().map(|s| s * s).sum::<f64>() / n_samples as f64).sqrt();
            let noise = Normal::new(0.0, rms / 10.0).expect("positive std");
            for s in samples.iter_mut() {
                *s += noise.sample(&mut rng);
            }
            let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            if peak > 1.0 {
                for s in samples.iter_mut() {
                    *s /= peak;
                }
            }
            let clip = AudioClip::new(samples, sample_rate).expect("normalized to unit peak");
            out.push((clip, label));
        }
    }
    out
}
