//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads PCM (8/16/24/32-bit integer) and IEEE float32 WAV files, downmixing
//! multi-channel audio by averaging channels. Writes 16-bit PCM, which is
//! all the toolkit ever needs to produce.

use std::path::Path;

use super::{AudioClip, AudioError};

/// Decodes a WAV file from disk.
pub fn load_wav(path: &Path) -> Result<AudioClip, AudioError> {
    let bytes = std::fs::read(path)?;
    decode_wav_bytes(&bytes)
}

/// Decodes a WAV file already in memory.
pub fn decode_wav_bytes(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::TruncatedData(format!(
            "file is {} bytes, smaller than a RIFF header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(AudioError::MalformedContainer("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedContainer(
            "missing WAVE form type".into(),
        ));
    }

    let mut fmt: Option<Format> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        if body_start + size > bytes.len() {
            return Err(AudioError::TruncatedData(format!(
                "chunk {} declares {} bytes but only {} remain",
                String::from_utf8_lossy(&id),
                size,
                bytes.len() - body_start
            )));
        }
        let body = &bytes[body_start..body_start + size];
        match &id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                let fmt = fmt.as_ref().ok_or_else(|| {
                    AudioError::MalformedContainer("data chunk appears before fmt".into())
                })?;
                return decode_data(body, fmt);
            }
            _ => {}
        }
        // Chunks are word-aligned; an odd size is followed by a pad byte.
        pos = body_start + size + (size & 1);
    }
    Err(AudioError::MalformedContainer(if fmt.is_some() {
        "no data chunk".into()
    } else {
        "no fmt chunk".into()
    }))
}

struct Format {
    audio_format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn parse_fmt(body: &[u8]) -> Result<Format, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::MalformedContainer(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let fmt = Format {
        audio_format: u16::from_le_bytes(body[0..2].try_into().unwrap()),
        channels: u16::from_le_bytes(body[2..4].try_into().unwrap()),
        sample_rate: u32::from_le_bytes(body[4..8].try_into().unwrap()),
        bits_per_sample: u16::from_le_bytes(body[14..16].try_into().unwrap()),
    };
    if fmt.channels == 0 {
        return Err(AudioError::MalformedContainer("zero channels".into()));
    }
    if fmt.sample_rate == 0 {
        return Err(AudioError::MalformedContainer("zero sample rate".into()));
    }
    match (fmt.audio_format, fmt.bits_per_sample) {
        (1, 8) | (1, 16) | (1, 24) | (1, 32) => Ok(fmt),
        (3, 32) => Ok(fmt),
        (1, bits) => Err(AudioError::UnsupportedEncoding(format!(
            "{bits}-bit integer PCM"
        ))),
        (3, bits) => Err(AudioError::UnsupportedEncoding(format!("{bits}-bit float"))),
        (code, _) => Err(AudioError::UnsupportedEncoding(format!(
            "format code {code:#06x}"
        ))),
    }
}

fn decode_data(body: &[u8], fmt: &Format) -> Result<AudioClip, AudioError> {
    let bytes_per_sample = fmt.bits_per_sample as usize / 8;
    let frame_size = bytes_per_sample * fmt.channels as usize;
    if body.len() % frame_size != 0 {
        return Err(AudioError::TruncatedData(format!(
            "data chunk of {} bytes is not a whole number of {}-byte frames",
            body.len(),
            frame_size
        )));
    }
    let n_frames = body.len() / frame_size;
    let channels = fmt.channels as usize;
    let mut samples = Vec::with_capacity(n_frames);
    for frame in 0..n_frames {
        let mut acc = 0.0f64;
        for ch in 0..channels {
            let at = frame * frame_size + ch * bytes_per_sample;
            acc += decode_sample(&body[at..at + bytes_per_sample], fmt.audio_format);
        }
        samples.push(acc / channels as f64);
    }
    AudioClip::new(samples, fmt.sample_rate)
}

fn decode_sample(raw: &[u8], audio_format: u16) -> f64 {
    match (audio_format, raw.len()) {
        // 8-bit PCM is unsigned with midpoint 128.
        (1, 1) => (raw[0] as f64 - 128.0) / 128.0,
        (1, 2) => i16::from_le_bytes([raw[0], raw[1]]) as f64 / 32768.0,
        (1, 3) => {
            let v = i32::from_le_bytes([0, raw[0], raw[1], raw[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (1, 4) => i32::from_le_bytes(raw.try_into().unwrap()) as f64 / 2_147_483_648.0,
        (3, 4) => {
            let v = f32::from_le_bytes(raw.try_into().unwrap()) as f64;
            if v.is_finite() {
                v.clamp(-1.0, 1.0)
            } else {
                0.0
            }
        }
        _ => unreachable!("format validated in parse_fmt"),
    }
}

/// Writes a mono 16-bit PCM WAV file. Samples are scaled by 32768, rounded,
/// and clamped, so any value of the form k/32768 survives a write/read
/// round trip exactly.
pub fn write_wav_pcm16(path: &Path, clip: &AudioClip) -> Result<(), AudioError> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds an in-memory WAV with the given format fields and raw data.
    fn make_wav(audio_format: u16, channels: u16, rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&audio_format.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        let block = channels as u32 * bits as u32 / 8;
        out.extend_from_slice(&(rate * block).to_le_bytes());
        out.extend_from_slice(&(block as u16).to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn decodes_16_bit_pcm_with_expected_scaling() {
        let mut data = Vec::new();
        for v in [0i16, 16384, -16384, 32767, -32768] {
            data.extend_from_slice(&v.to_le_bytes());
        }
        let clip = decode_wav_bytes(&make_wav(1, 1, 22050, 16, &data)).unwrap();
        assert_eq!(clip.sample_rate(), 22050);
        let expect = [0.0, 0.5, -0.5, 32767.0 / 32768.0, -1.0];
        for (got, want) in clip.samples().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn decodes_8_bit_unsigned() {
        let clip = decode_wav_bytes(&make_wav(1, 1, 8000, 8, &[128, 255, 0, 192])).unwrap();
        let expect = [0.0, 127.0 / 128.0, -1.0, 0.5];
        for (got, want) in clip.samples().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn decodes_24_bit_pcm() {
        let mut data = Vec::new();
        for v in [0i32, 4_194_304, -8_388_608, 8_388_607] {
            data.extend_from_slice(&v.to_le_bytes()[0..3]);
        }
        let clip = decode_wav_bytes(&make_wav(1, 1, 48000, 24, &data)).unwrap();
        let expect = [0.0, 0.5, -1.0, 8_388_607.0 / 8_388_608.0];
        for (got, want) in clip.samples().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn decodes_32_bit_pcm_and_float() {
        let mut data = Vec::new();
        data.extend_from_slice(&i32::MIN.to_le_bytes());
        data.extend_from_slice(&(1i32 << 30).to_le_bytes());
        let clip = decode_wav_bytes(&make_wav(1, 1, 44100, 32, &data)).unwrap();
        assert_eq!(clip.samples(), &[-1.0, 0.5]);

        let mut data = Vec::new();
        for v in [0.25f32, -1.5, 2.0] {
            data.extend_from_slice(&v.to_le_bytes());
        }
        let clip = decode_wav_bytes(&make_wav(3, 1, 44100, 32, &data)).unwrap();
        // Out-of-range float samples clamp instead of failing validation.
        assert_eq!(clip.samples(), &[0.25, -1.0, 1.0]);
    }

    #[test]
    fn downmixes_stereo_by_averaging() {
        let mut data = Vec::new();
        for v in [16384i16, -16384, 32767, 32767] {
            data.extend_from_slice(&v.to_le_bytes());
        }
        let clip = decode_wav_bytes(&make_wav(1, 2, 22050, 16, &data)).unwrap();
        assert_eq!(clip.len(), 2);
        assert!((clip.samples()[0] - 0.0).abs() < 1e-15);
        assert!((clip.samples()[1] - 32767.0 / 32768.0).abs() < 1e-15);
    }

    #[test]
    fn skips_unknown_chunks_including_odd_sized() {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&0u32.to_le_bytes()); // size not trusted anyway
        out.extend_from_slice(b"WAVE");
        // LIST chunk with an odd size followed by its pad byte.
        out.extend_from_slice(b"LIST");
        out.extend_from_slice(&3u32.to_le_bytes());
        out.extend_from_slice(&[1, 2, 3, 0]);
        // Then a normal fmt + data.
        let tail = make_wav(1, 1, 8000, 16, &1000i16.to_le_bytes());
        out.extend_from_slice(&tail[12..]);
        let clip = decode_wav_bytes(&out).unwrap();
        assert!((clip.samples()[0] - 1000.0 / 32768.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_magic() {
        let wav = make_wav(1, 1, 8000, 16, &[0, 0]);
        let mut bad = wav.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_wav_bytes(&bad),
            Err(AudioError::MalformedContainer(_))
        ));
        let mut bad = wav;
        bad[8..12].copy_from_slice(b"AIFF");
        assert!(matches!(
            decode_wav_bytes(&bad),
            Err(AudioError::MalformedContainer(_))
        ));
    }

    #[test]
    fn rejects_truncated_data_chunk() {
        let mut wav = make_wav(1, 1, 8000, 16, &[0, 0, 0, 0]);
        wav.truncate(wav.len() - 2);
        assert!(matches!(
            decode_wav_bytes(&wav),
            Err(AudioError::TruncatedData(_))
        ));
    }

    #[test]
    fn rejects_unsupported_codecs() {
        // A-law (format code 6).
        assert!(matches!(
            decode_wav_bytes(&make_wav(6, 1, 8000, 8, &[0])),
            Err(AudioError::UnsupportedEncoding(_))
        ));
        // 64-bit float.
        assert!(matches!(
            decode_wav_bytes(&make_wav(3, 1, 8000, 64, &[0; 8])),
            Err(AudioError::UnsupportedEncoding(_))
        ));
        // 12-bit PCM.
        assert!(matches!(
            decode_wav_bytes(&make_wav(1, 1, 8000, 12, &[0; 2])),
            Err(AudioError::UnsupportedEncoding(_))
        ));
    }

    #[test]
    fn rejects_data_before_fmt_and_missing_chunks() {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&12u32.to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"data");
        out.extend_from_slice(&2u32.to_le_bytes());
        out.extend_from_slice(&[0, 0]);
        assert!(matches!(
            decode_wav_bytes(&out),
            Err(AudioError::MalformedContainer(_))
        ));

        let only_header = b"RIFF\x04\x00\x00\x00WAVE".to_vec();
        assert!(matches!(
            decode_wav_bytes(&only_header),
            Err(AudioError::MalformedContainer(_))
        ));
    }

    #[test]
    fn pcm16_write_read_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let samples: Vec<f64> = (-10..=10).map(|k| k as f64 * 1000.0 / 32768.0).collect();
        let clip = AudioClip::new(samples, 22050).unwrap();
        write_wav_pcm16(&path, &clip).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back, clip);
    }
}
