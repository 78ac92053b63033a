//! MFCC extraction: STFT power spectrogram, mel filterbank, log
//! compression, and an orthonormal DCT-II, composed into per-frame
//! cepstral coefficient sequences.

mod fft;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::AudioClip;
use fft::Fft;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("cannot analyze an empty signal")]
    EmptySignal,
    #[error("cannot pool an empty feature sequence")]
    EmptySequence,
    #[error("mel filter {index} covers no spectrum bins")]
    DegenerateFilter { index: usize },
    #[error("clip sample rate {clip} Hz does not match config sample rate {config} Hz")]
    SampleRateMismatch { clip: u32, config: u32 },
}

/// Parameters of the feature extraction front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    /// FFT size; must be a power of two. Frames are this long.
    pub n_fft: usize,
    /// Samples between successive frame starts.
    pub hop_length: usize,
    /// Number of triangular mel filters.
    pub n_mels: usize,
    /// Number of leading cepstral coefficients kept per frame.
    pub n_mfcc: usize,
    /// Lower edge of the mel filterbank in Hz.
    pub fmin: f64,
    /// Upper edge of the mel filterbank in Hz.
    pub fmax: f64,
    /// Power values are clamped to at least this before the log.
    pub power_floor: f64,
}

impl FeatureConfig {
    /// The standard configuration for a given sample rate: 2048-point FFT,
    /// 512-sample hop, 128 mel filters spanning 0 Hz to Nyquist, 40
    /// coefficients.
    pub fn new(sample_rate: u32) -> Self {
        FeatureConfig {
            sample_rate,
            n_fft: 2048,
            hop_length: 512,
            n_mels: 128,
            n_mfcc: 40,
            fmin: 0.0,
            fmax: sample_rate as f64 / 2.0,
            power_floor: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let fail = |msg: String| Err(FeatureError::InvalidConfig(msg));
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive".into());
        }
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return fail(format!(
                "n_fft must be a power of two >= 2, got {}",
                self.n_fft
            ));
        }
        if self.hop_length == 0 || self.hop_length > self.n_fft {
            return fail(format!(
                "hop_length must be in 1..={}, got {}",
                self.n_fft, self.hop_length
            ));
        }
        if self.n_mels == 0 {
            return fail("n_mels must be positive".into());
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return fail(format!(
                "n_mfcc must be in 1..={}, got {}",
                self.n_mels, self.n_mfcc
            ));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return fail(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got fmin={} fmax={}",
                self.fmin, self.fmax
            ));
        }
        if !(self.power_floor > 0.0) {
            return fail(format!(
                "power_floor must be positive, got {}",
                self.power_floor
            ));
        }
        Ok(())
    }

    /// Number of non-redundant spectrum bins per frame.
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// SHA-256 over a canonical rendering of every field, used to detect
    /// feature caches produced under a different configuration.
    pub fn content_hash(&self) -> [u8; 32] {
        let canon = format!(
            "sample_rate={};n_fft={};hop_length={};n_mels={};n_mfcc={};fmin={};fmax={};power_floor={}",
            self.sample_rate,
            self.n_fft,
            self.hop_length,
            self.n_mels,
            self.n_mfcc,
            self.fmin,
            self.fmax,
            self.power_floor
        );
        Sha256::digest(canon.as_bytes()).into()
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::new(22050)
    }
}

/// Converts Hz to mel.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Converts mel to Hz.
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Power spectrogram: one row per frame, `n_fft/2 + 1` bins per row.
#[derive(Debug, Clone)]
pub struct PowerSpectrogram {
    pub frames: Array2<f64>,
}

/// Short-time power spectrum of a signal.
///
/// The signal is reflection-padded by `n_fft/2` on both ends so frames are
/// centered on multiples of the hop length, giving `1 + len/hop` frames.
/// Each frame is windowed with a periodic Hann window before the FFT.
pub fn stft_power(samples: &[f64], cfg: &FeatureConfig) -> Result<PowerSpectrogram, FeatureError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(FeatureError::EmptySignal);
    }
    let n = cfg.n_fft;
    let half = n / 2;
    let padded: Vec<f64> = (0..samples.len() + n)
        .map(|k| samples[reflect_index(k as isize - half as isize, samples.len())])
        .collect();
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();

    let n_frames = 1 + samples.len() / cfg.hop_length;
    let plan = Fft::new(n);
    let mut frames = Array2::zeros((n_frames, cfg.n_bins()));
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for t in 0..n_frames {
        let start = t * cfg.hop_length;
        for i in 0..n {
            re[i] = padded[start + i] * window[i];
            im[i] = 0.0;
        }
        plan.forward(&mut re, &mut im);
        for b in 0..cfg.n_bins() {
            frames[[t, b]] = re[b] * re[b] + im[b] * im[b];
        }
    }
    Ok(PowerSpectrogram { frames })
}

/// Mirrors an index into `[0, len)` without repeating the edge samples,
/// bouncing as many times as needed for very short signals.
fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= len as isize {
        j = period - j;
    }
    j as usize
}

/// Triangular mel filterbank. `weights` has one row per filter over the
/// spectrum bins.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    pub weights: Array2<f64>,
    /// Peak frequency of each filter in Hz.
    pub center_freqs_hz: Vec<f64>,
}

/// Builds `n_mels` triangular filters with edges equally spaced on the mel
/// scale between `fmin` and `fmax`, evaluated at the FFT bin frequencies.
/// Each triangle is scaled by `2 / (f_hi - f_lo)` so its ideal area is one.
pub fn mel_filterbank(cfg: &FeatureConfig) -> Result<MelFilterbank, FeatureError> {
    cfg.validate()?;
    let m = cfg.n_mels;
    let mel_lo = hz_to_mel(cfg.fmin);
    let mel_hi = hz_to_mel(cfg.fmax);
    let hz: Vec<f64> = (0..m + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (m + 1) as f64))
        .collect();

    let n_bins = cfg.n_bins();
    let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
    let mut weights = Array2::zeros((m, n_bins));
    for row in 0..m {
        let (lo, center, hi) = (hz[row], hz[row + 1], hz[row + 2]);
        let norm = 2.0 / (hi - lo);
        let mut any = false;
        for b in 0..n_bins {
            let f = b as f64 * bin_hz;
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            let w = rising.min(falling).max(0.0);
            if w > 0.0 {
                any = true;
            }
            weights[[row, b]] = w * norm;
        }
        if !any {
            return Err(FeatureError::DegenerateFilter { index: row });
        }
    }
    Ok(MelFilterbank {
        weights,
        center_freqs_hz: hz[1..=m].to_vec(),
    })
}

/// Orthonormal DCT-II of a vector:
/// `y[k] = s(k) * sum_j v[j] * cos(pi*k*(2j+1)/(2n))` with
/// `s(0) = sqrt(1/n)` and `s(k>0) = sqrt(2/n)`.
pub fn dct_ii_ortho(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n > 0, "DCT input must be non-empty");
    let mut out = vec![0.0; n];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &x) in v.iter().enumerate() {
            acc +=
                x * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2 * n) as f64).cos();
        }
        let scale = if k == 0 {
            1.0 / n as f64
        } else {
            2.0 / n as f64
        };
        *slot = scale.sqrt() * acc;
    }
    out
}

/// MFCC sequence: one row per frame, `n_mfcc` coefficients per row.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccSequence {
    pub frames: Array2<f64>,
}

impl MfccSequence {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_coeffs(&self) -> usize {
        self.frames.ncols()
    }
}

/// Full MFCC pipeline: power spectrogram, mel projection, decibel-style log
/// compression (`10*log10(max(p, power_floor))`), then the first `n_mfcc`
/// orthonormal DCT-II coefficients of each frame.
pub fn mfcc(clip: &AudioClip, cfg: &FeatureConfig) -> Result<MfccSequence, FeatureError> {
    if clip.sample_rate() != cfg.sample_rate {
        return Err(FeatureError::SampleRateMismatch {
            clip: clip.sample_rate(),
            config: cfg.sample_rate,
        });
    }
    let spectrogram = stft_power(clip.samples(), cfg)?;
    let fb = mel_filterbank(cfg)?;
    let mel = spectrogram.frames.dot(&fb.weights.t());
    let logmel = mel.mapv(|p| 10.0 * p.max(cfg.power_floor).log10());

    let mut frames = Array2::zeros((logmel.nrows(), cfg.n_mfcc));
    let mut row_buf = vec![0.0; cfg.n_mels];
    for t in 0..logmel.nrows() {
        for (i, v) in logmel.row(t).iter().enumerate() {
            row_buf[i] = *v;
        }
        let coeffs = dct_ii_ortho(&row_buf);
        for k in 0..cfg.n_mfcc {
            frames[[t, k]] = coeffs[k];
        }
    }
    Ok(MfccSequence { frames })
}

/// Averages a feature sequence over time into a single vector.
pub fn mean_pool(seq: &MfccSequence) -> Result<Vec<f64>, FeatureError> {
    if seq.frames.nrows() == 0 {
        return Err(FeatureError::EmptySequence);
    }
    Ok(seq
        .frames
        .mean_axis(Axis(0))
        .expect("non-empty sequence")
        .to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_conversions_round_trip_and_hit_known_point() {
        // 2595 * log10(2) at 700 Hz.
        assert!((hz_to_mel(700.0) - 781.172_838_748_031_2).abs() < 1e-9);
        assert!(hz_to_mel(0.0).abs() < 1e-12);
        for hz in [10.0, 440.0, 4000.0, 11025.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9 * hz);
        }
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let ok = FeatureConfig::default();
        assert!(ok.validate().is_ok());
        let cases: Vec<Box<dyn Fn(&mut FeatureConfig)>> = vec![
            Box::new(|c| c.n_fft = 1000),
            Box::new(|c| c.hop_length = 0),
            Box::new(|c| c.hop_length = c.n_fft + 1),
            Box::new(|c| c.n_mfcc = c.n_mels + 1),
            Box::new(|c| c.n_mels = 0),
            Box::new(|c| c.fmax = c.sample_rate as f64),
            Box::new(|c| c.fmin = -1.0),
            Box::new(|c| {
                c.fmin = 5000.0;
                c.fmax = 4000.0;
            }),
            Box::new(|c| c.power_floor = 0.0),
        ];
        for (i, tweak) in cases.iter().enumerate() {
            let mut c = ok.clone();
            tweak(&mut c);
            assert!(
                matches!(c.validate(), Err(FeatureError::InvalidConfig(_))),
                "case {i} should fail"
            );
        }
    }

    #[test]
    fn content_hash_tracks_every_field() {
        let base = FeatureConfig::default();
        let mut other = base.clone();
        other.power_floor = 1e-9;
        assert_ne!(base.content_hash(), other.content_hash());
        assert_eq!(base.content_hash(), FeatureConfig::default().content_hash());
    }

    #[test]
    fn frame_count_follows_hop_division() {
        let cfg = FeatureConfig::default();
        // 3 s at 22050 Hz: 66150 samples -> 1 + 66150/512 = 130 frames.
        let spectrogram = stft_power(&vec![0.1; 66150], &cfg).unwrap();
        assert_eq!(spectrogram.frames.shape(), &[130, 1025]);
        // One sample still yields one centered frame.
        let spectrogram = stft_power(&[0.5], &cfg).unwrap();
        assert_eq!(spectrogram.frames.nrows(), 1);
        assert!(matches!(
            stft_power(&[], &cfg),
            Err(FeatureError::EmptySignal)
        ));
    }

    #[test]
    fn reflect_index_bounces_without_repeating_edges() {
        // Signal [a b c d]: left pad ... c b |a b c d| c b a b ...
        let vals: Vec<usize> = (-3..=6).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(vals, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-5, 2), 1);
        assert_eq!(reflect_index(100, 1), 0);
    }

    #[test]
    fn stft_tone_peaks_in_matching_bin() {
        let mut cfg = FeatureConfig::new(8000);
        cfg.n_fft = 256;
        cfg.hop_length = 128;
        // 500 Hz at 8 kHz with 256 bins: bin = 500/8000*256 = 16 exactly.
        let samples: Vec<f64> = (0..4096)
            .map(|i| 0.7 * (2.0 * std::f64::consts::PI * 500.0 * i as f64 / 8000.0).sin())
            .collect();
        let spectrogram = stft_power(&samples, &cfg).unwrap();
        // Check an interior frame, away from padding transients.
        let frame = spectrogram.frames.row(16);
        let peak = frame
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 16);
    }

    #[test]
    fn filterbank_rows_are_nonnegative_unit_area_triangles() {
        let cfg = FeatureConfig::default();
        let fb = mel_filterbank(&cfg).unwrap();
        assert_eq!(fb.weights.shape(), &[128, 1025]);
        assert_eq!(fb.center_freqs_hz.len(), 128);
        let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
        for row in 0..128 {
            assert!(fb.weights.row(row).iter().all(|&w| w >= 0.0));
            // Riemann sum of a unit-area triangle; wide filters approximate
            // it closely, narrow low-frequency ones only roughly.
            let area: f64 = fb.weights.row(row).iter().sum::<f64>() * bin_hz;
            assert!(area < 1.6, "row {row} area {area}");
            if row > 40 {
                assert!((area - 1.0).abs() < 0.05, "row {row} area {area}");
            }
        }
        for w in fb.center_freqs_hz.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn filterbank_peaks_at_filter_centers() {
        let cfg = FeatureConfig::default();
        let fb = mel_filterbank(&cfg).unwrap();
        for row in (0..128).step_by(9) {
            let center = fb.center_freqs_hz[row];
            let mel_step = hz_to_mel(cfg.fmax) / 129.0;
            let lo = mel_to_hz(hz_to_mel(center) - mel_step);
            let hi = mel_to_hz(hz_to_mel(center) + mel_step);
            let peak_height = 2.0 / (hi - lo);
            // No sampled weight exceeds the triangle's analytic peak, and
            // the largest sample sits within one bin of the center.
            let (argmax, max) = fb
                .weights
                .row(row)
                .iter()
                .cloned()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(max <= peak_height + 1e-12, "row {row}");
            let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
            assert!(
                (argmax as f64 * bin_hz - center).abs() <= bin_hz,
                "row {row}: argmax bin at {} Hz vs center {center} Hz",
                argmax as f64 * bin_hz
            );
        }
    }

    #[test]
    fn degenerate_filterbank_is_reported() {
        // 4096 filters over a 257-bin spectrum cannot all own a bin.
        let mut cfg = FeatureConfig::new(8000);
        cfg.n_fft = 512;
        cfg.n_mels = 4096;
        cfg.n_mfcc = 40;
        assert!(matches!(
            mel_filterbank(&cfg),
            Err(FeatureError::DegenerateFilter { .. })
        ));
    }

    #[test]
    fn dct_is_orthonormal() {
        let n = 16;
        // Rows of the DCT matrix, via the standard basis.
        let mut mat = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = dct_ii_ortho(&e);
            for k in 0..n {
                mat[k][j] = col[k];
            }
        }
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|j| mat[a][j] * mat[b][j]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "rows {a},{b}: {dot}");
            }
        }
    }

    #[test]
    fn dct_constant_input_concentrates_in_first_coefficient() {
        let out = dct_ii_ortho(&[1.0; 4]);
        assert!((out[0] - 2.0).abs() < 1e-12);
        for &c in &out[1..] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn mfcc_shape_for_three_seconds_is_130_by_40() {
        let cfg = FeatureConfig::default();
        let clip = crate::audio::AudioClip::new(vec![0.01; 66150], 22050).unwrap();
        let seq = mfcc(&clip, &cfg).unwrap();
        assert_eq!(seq.frames.shape(), &[130, 40]);
    }

    #[test]
    fn mfcc_of_silence_is_floor_constant() {
        let cfg = FeatureConfig::default();
        let clip = crate::audio::AudioClip::new(vec![0.0; 22050], 22050).unwrap();
        let seq = mfcc(&clip, &cfg).unwrap();
        // Every mel channel sits at the power floor, so each log-mel frame
        // is the constant -100 dB: c0 = -100*sqrt(128), the rest zero.
        let c0 = -100.0 * 128f64.sqrt();
        for t in 0..seq.n_frames() {
            assert!((seq.frames[[t, 0]] - c0).abs() < 1e-9);
            for k in 1..40 {
                assert!(seq.frames[[t, k]].abs() < 1e-9, "frame {t} coeff {k}");
            }
        }
    }

    #[test]
    fn mfcc_rejects_rate_mismatch() {
        let cfg = FeatureConfig::default();
        let clip = crate::audio::AudioClip::new(vec![0.0; 100], 16000).unwrap();
        assert!(matches!(
            mfcc(&clip, &cfg),
            Err(FeatureError::SampleRateMismatch {
                clip: 16000,
                config: 22050
            })
        ));
    }

    #[test]
    fn mean_pool_averages_frames() {
        let seq = MfccSequence {
            frames: ndarray::array![[1.0, 2.0], [3.0, 6.0]],
        };
        assert_eq!(mean_pool(&seq).unwrap(), vec![2.0, 4.0]);
        let empty = MfccSequence {
            frames: Array2::zeros((0, 4)),
        };
        assert!(matches!(
            mean_pool(&empty),
            Err(FeatureError::EmptySequence)
        ));
    }

    /// End-to-end reference: an entirely separate implementation of the
    /// pipeline using a direct DFT and no shared helper code, checked
    /// against the production path on a small configuration.
    #[test]
    fn pipeline_matches_independent_reference() {
        let mut cfg = FeatureConfig::new(800);
        cfg.n_fft = 64;
        cfg.hop_length = 16;
        cfg.n_mels = 6;
        cfg.n_mfcc = 4;

        let samples: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64 / 800.0;
                0.5 * (2.0 * std::f64::consts::PI * 90.0 * t).sin()
                    + 0.2 * (2.0 * std::f64::consts::PI * 260.0 * t + 0.7).cos()
            })
            .collect();
        let clip = crate::audio::AudioClip::new(samples.clone(), 800).unwrap();
        let got = mfcc(&clip, &cfg).unwrap();
        let want = reference_mfcc(&samples, &cfg);
        assert_eq!(got.frames.nrows(), want.len());
        for t in 0..want.len() {
            for k in 0..cfg.n_mfcc {
                assert!(
                    (got.frames[[t, k]] - want[t][k]).abs() < 1e-9,
                    "frame {t} coeff {k}: {} vs {}",
                    got.frames[[t, k]],
                    want[t][k]
                );
            }
        }
    }

    fn reference_mfcc(x: &[f64], cfg: &FeatureConfig) -> Vec<Vec<f64>> {
        let n = cfg.n_fft;
        let half = n / 2;
        let len = x.len() as isize;
        let pick = |i: isize| -> f64 {
            let period = 2 * (len - 1);
            let mut j = i.rem_euclid(period);
            if j >= len {
                j = period - j;
            }
            x[j as usize]
        };
        let n_frames = 1 + x.len() / cfg.hop_length;
        let mel_hi = 2595.0 * (1.0 + cfg.fmax / 700.0).log10();
        let mel_lo = 2595.0 * (1.0 + cfg.fmin / 700.0).log10();
        let edges: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| {
                let mel = mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64;
                700.0 * (10f64.powf(mel / 2595.0) - 1.0)
            })
            .collect();

        let mut out = Vec::new();
        for fr in 0..n_frames {
            let start = fr * cfg.hop_length;
            let frame: Vec<f64> = (0..n)
                .map(|i| {
                    let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
                    pick(start as isize + i as isize - half as isize) * w
                })
                .collect();
            // Direct DFT power per bin.
            let power: Vec<f64> = (0..=n / 2)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (i, &v) in frame.iter().enumerate() {
                        let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                        re += v * ang.cos();
                        im += v * ang.sin();
                    }
                    re * re + im * im
                })
                .collect();
            // Mel projection and log.
            let logmel: Vec<f64> = (0..cfg.n_mels)
                .map(|m| {
                    let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                    let mut acc = 0.0;
                    for (b, &p) in power.iter().enumerate() {
                        let f = b as f64 * cfg.sample_rate as f64 / n as f64;
                        let tri = ((f - lo) / (c - lo)).min((hi - f) / (hi - c)).max(0.0);
                        acc += p * tri * 2.0 / (hi - lo);
                    }
                    10.0 * acc.max(cfg.power_floor).log10()
                })
                .collect();
            // Orthonormal DCT-II, first n_mfcc coefficients.
            let m = cfg.n_mels as f64;
            let coeffs: Vec<f64> = (0..cfg.n_mfcc)
                .map(|k| {
                    let s = if k == 0 {
                        (1.0 / m).sqrt()
                    } else {
                        (2.0 / m).sqrt()
                    };
                    s * logmel
                        .iter()
                        .enumerate()
                        .map(|(j, &v)| {
                            v * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2.0 * m))
                                .cos()
                        })
                        .sum::<f64>()
                })
                .collect();
            out.push(coeffs);
        }
        out
    }
}
