//! Sample-rate conversion with a windowed-sinc kernel.

use super::AudioClip;

/// Half-width of the sinc kernel in source samples.
const TAPS: isize = 32;

/// Resamples a clip to `target_rate` with a Hann-windowed sinc kernel
/// (32 taps each side). The kernel is low-passed at the lower of the two
/// Nyquist frequencies, the signal is treated as zero outside its ends,
/// and each output sample is divided by its kernel sum so a constant
/// signal stays constant. Output samples are clamped to [-1, 1] to absorb
/// ringing overshoot. When the rates match the clip is returned unchanged.
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == clip.sample_rate() {
        return clip.clone();
    }
    let src = clip.sample_rate() as f64;
    let tgt = target_rate as f64;
    let x = clip.samples();
    let out_len = (x.len() as f64 * tgt / src).round() as usize;
    // Cutoff as a fraction of the source Nyquist frequency.
    let fc = (tgt / src).min(1.0);

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let center = j as f64 * src / tgt;
        let lo = (center - TAPS as f64).ceil() as isize;
        let hi = (center + TAPS as f64).floor() as isize;
        let mut acc = 0.0;
        let mut kernel_sum = 0.0;
        for i in lo..=hi {
            let u = i as f64 - center;
            let w = fc * sinc(fc * u) * hann_window(u);
            kernel_sum += w;
            if i >= 0 && (i as usize) < x.len() {
                acc += x[i as usize] * w;
            }
        }
        out.push((acc / kernel_sum).clamp(-1.0, 1.0));
    }
    AudioClip::new(out, target_rate).expect("clamped samples satisfy clip invariants")
}

fn sinc(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        1.0
    } else {
        let pv = std::f64::consts::PI * v;
        pv.sin() / pv
    }
}

/// Hann window over [-TAPS, TAPS], zero at the edges.
fn hann_window(u: f64) -> f64 {
    if u.abs() >= TAPS as f64 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * u / TAPS as f64).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rates_return_identical_samples() {
        let clip =
            AudioClip::new((0..50).map(|i| (i as f64 / 100.0).sin()).collect(), 22050).unwrap();
        let out = resample(&clip, 22050);
        assert_eq!(out, clip);
    }

    #[test]
    fn output_length_rounds() {
        let clip = AudioClip::new(vec![0.0; 24414], 24414).unwrap();
        assert_eq!(resample(&clip, 22050).len(), 22050);
        let clip = AudioClip::new(vec![0.0; 1001], 44100).unwrap();
        // 1001 * 22050 / 44100 = 500.5 rounds to 501 (ties away from zero).
        assert_eq!(resample(&clip, 22050).len(), 501);
    }

    #[test]
    fn preserves_dc_away_from_edges() {
        let clip = AudioClip::new(vec![0.25; 2000], 44100).unwrap();
        let out = resample(&clip, 22050);
        // An output sample at index j reads source positions j*2 +- 32, so
        // indices 17..len-17 see the full kernel support.
        for (j, &v) in out
            .samples()
            .iter()
            .enumerate()
            .skip(17)
            .take(out.len() - 34)
        {
            assert!((v - 0.25).abs() < 1e-9, "index {j}: {v}");
        }
    }

    #[test]
    fn sine_survives_downsampling_at_the_same_frequency() {
        // 0.4 s of 440 Hz at 24414 Hz, resampled to 22050 Hz.
        let src_rate = 24414u32;
        let n = (0.4 * src_rate as f64) as usize;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / src_rate as f64).sin() * 0.9)
            .collect();
        let clip = AudioClip::new(samples, src_rate).unwrap();
        let out = resample(&clip, 22050);

        // Locate the strongest DFT bin over the interior of the result.
        let trimmed = &out.samples()[100..out.len() - 100];
        let peak_hz = dft_peak_hz(trimmed, 22050.0);
        let bin_width = 22050.0 / trimmed.len() as f64;
        assert!(
            (peak_hz - 440.0).abs() <= bin_width,
            "peak at {peak_hz} Hz, bin width {bin_width}"
        );
    }

    /// Frequency of the largest-magnitude bin of a direct DFT.
    fn dft_peak_hz(x: &[f64], rate: f64) -> f64 {
        let n = x.len();
        let mut best = (0usize, -1.0f64);
        for k in 1..n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * i % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            let mag = re * re + im * im;
            if mag > best.1 {
                best = (k, mag);
            }
        }
        best.0 as f64 * rate / n as f64
    }
}
