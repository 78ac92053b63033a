//! Exercises the C interface from Rust: round trips through the exported
//! functions and compares against the underlying library.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use ndarray::Array2;
use rand::Rng as _;

use serkit::audio::{load_wav, resample, write_wav_pcm16, AudioClip};
use serkit::dataset::generate_synthetic;
use serkit::dataset::model_io::{save_lstm, save_svm};
use serkit::features::{mfcc, FeatureConfig};
use serkit::model::{predict, ModelState};
use serkit::rng::stream_rng;
use serkit::svm::{svm_fit, SvmConfig};

use serkit_ffi::*;

const SEVEN: [&str; 7] = [
    "angry",
    "disgust",
    "fear",
    "happy",
    "neutral",
    "pleasant_surprise",
    "sad",
];

fn seven_labels() -> Vec<String> {
    SEVEN.iter().map(|s| s.to_string()).collect()
}

fn c_path(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

/// 8 kHz / 256-point settings so tests stay fast; 0.5 s gives 32 frames.
fn small_cfg(duration: f64) -> SerkitFeatureConfig {
    SerkitFeatureConfig {
        sample_rate: 8000,
        n_fft: 256,
        hop_length: 128,
        n_mels: 40,
        n_mfcc: 13,
        fmin: 0.0,
        fmax: 4000.0,
        duration,
    }
}

fn small_feature_config() -> FeatureConfig {
    FeatureConfig {
        sample_rate: 8000,
        n_fft: 256,
        hop_length: 128,
        n_mels: 40,
        n_mfcc: 13,
        fmin: 0.0,
        fmax: 4000.0,
        power_floor: 1e-10,
    }
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(serkit_last_error())
            .to_str()
            .unwrap()
            .to_string()
    }
}

#[test]
fn version_and_default_config_are_exposed() {
    let version = unsafe { CStr::from_ptr(serkit_version()) }
        .to_str()
        .unwrap();
    assert!(version.contains('.'), "version {version:?}");

    let mut cfg = small_cfg(0.0);
    let status = unsafe { serkit_feature_config_default(22_050, &mut cfg) };
    assert_eq!(status, SerkitStatus::Ok);
    assert_eq!(cfg.sample_rate, 22_050);
    assert_eq!(cfg.n_fft, 2048);
    assert_eq!(cfg.hop_length, 512);
    assert_eq!(cfg.n_mels, 128);
    assert_eq!(cfg.n_mfcc, 40);
    assert_eq!(cfg.fmax, 11_025.0);
    assert_eq!(cfg.duration, 3.0);

    assert_eq!(
        unsafe { serkit_feature_config_default(22_050, ptr::null_mut()) },
        SerkitStatus::NullArgument
    );
    assert_eq!(
        unsafe { serkit_feature_config_default(0, &mut cfg) },
        SerkitStatus::InvalidConfig
    );
}

#[test]
fn sequence_model_round_trips_and_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    let wav_path = dir.path().join("clip.wav");

    let mut rng = stream_rng(11, 2);
    let model = ModelState::init(13, 32, seven_labels(), &mut rng);
    save_lstm(&model_path, &model).unwrap();

    let (clip, _) = generate_synthetic(1, 0.5, 8000, 7).remove(0);
    write_wav_pcm16(&wav_path, &clip).unwrap();

    let mut handle: *mut SerkitModel = ptr::null_mut();
    let status = unsafe { serkit_model_load(c_path(&model_path).as_ptr(), &mut handle) };
    assert_eq!(status, SerkitStatus::Ok);
    assert!(!handle.is_null());

    unsafe {
        assert_eq!(
            CStr::from_ptr(serkit_model_kind(handle)).to_str(),
            Ok("lstm")
        );
        assert_eq!(serkit_model_n_labels(handle), 7);
        for (i, want) in SEVEN.iter().enumerate() {
            let got = CStr::from_ptr(serkit_model_label(handle, i))
                .to_str()
                .unwrap();
            assert_eq!(&got, want);
        }
        assert!(serkit_model_label(handle, 7).is_null());

        let (mut frames, mut coeffs) = (0usize, 0usize);
        assert_eq!(
            serkit_model_expected_shape(handle, &mut frames, &mut coeffs),
            SerkitStatus::Ok
        );
        assert_eq!((frames, coeffs), (32, 13));
    }

    let cfg = small_cfg(0.5);
    let mut scores = [0.0f64; 7];
    let mut winner = usize::MAX;
    let status = unsafe {
        serkit_predict_wav(
            handle,
            c_path(&wav_path).as_ptr(),
            &cfg,
            scores.as_mut_ptr(),
            scores.len(),
            &mut winner,
        )
    };
    assert_eq!(status, SerkitStatus::Ok, "{}", last_error());

    // The same file through the library directly must agree exactly.
    let decoded = load_wav(&wav_path).unwrap();
    let decoded = resample(&decoded, 8000).fix_length(0.5);
    let seq = mfcc(&decoded, &small_feature_config()).unwrap();
    let (want_winner, want_scores) = predict(&model, seq.frames.view()).unwrap();
    assert_eq!(winner, want_winner);
    assert_eq!(scores.to_vec(), want_scores);
    let sum: f64 = scores.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9);

    // Raw-sample entry point sees the dequantized samples, so it agrees too.
    let mut winner2 = usize::MAX;
    let status = unsafe {
        serkit_predict_samples(
            handle,
            decoded.samples().as_ptr(),
            decoded.len(),
            &cfg,
            ptr::null_mut(),
            0,
            &mut winner2,
        )
    };
    assert_eq!(status, SerkitStatus::Ok, "{}", last_error());
    assert_eq!(winner2, want_winner);

    unsafe { serkit_model_free(handle) };
}

#[test]
fn baseline_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("svm.json");

    let mut rng = stream_rng(23, 5);
    let x = Array2::from_shape_fn((21, 13), |_| 2.0 * rng.random::<f64>() - 1.0);
    let y: Vec<usize> = (0..21).map(|i| i / 3).collect();
    let model = svm_fit(&x, &y, seven_labels(), &SvmConfig::default()).unwrap();
    save_svm(&model_path, &model).unwrap();

    let mut handle: *mut SerkitModel = ptr::null_mut();
    let status = unsafe { serkit_model_load(c_path(&model_path).as_ptr(), &mut handle) };
    assert_eq!(status, SerkitStatus::Ok, "{}", last_error());

    unsafe {
        assert_eq!(
            CStr::from_ptr(serkit_model_kind(handle)).to_str(),
            Ok("svm")
        );
        let (mut frames, mut coeffs) = (usize::MAX, 0usize);
        assert_eq!(
            serkit_model_expected_shape(handle, &mut frames, &mut coeffs),
            SerkitStatus::Ok
        );
        assert_eq!(
            (frames, coeffs),
            (0, 13),
            "any frame count, 13 coefficients"
        );
    }

    // Any clip duration works for the pooled baseline.
    let samples: Vec<f64> = (0..6000)
        .map(|i| (std::f64::consts::TAU * 300.0 * i as f64 / 8000.0).sin() * 0.5)
        .collect();
    let cfg = small_cfg(0.0);
    let mut shares = [0.0f64; 7];
    let mut winner = usize::MAX;
    let status = unsafe {
        serkit_predict_samples(
            handle,
            samples.as_ptr(),
            samples.len(),
            &cfg,
            shares.as_mut_ptr(),
            shares.len(),
            &mut winner,
        )
    };
    assert_eq!(status, SerkitStatus::Ok, "{}", last_error());
    assert!(winner < 7);
    let total: f64 = shares.iter().sum();
    assert!(
        (total - 1.0).abs() < 1e-9,
        "vote shares sum to 1, got {total}"
    );

    unsafe { serkit_model_free(handle) };
}

#[test]
fn feature_extraction_fills_caller_buffers() {
    let samples: Vec<f64> = (0..1600)
        .map(|i| (std::f64::consts::TAU * 440.0 * i as f64 / 8000.0).sin() * 0.8)
        .collect();
    let cfg = small_cfg(0.0);

    // Query mode: null output buffer reports the dimensions.
    let (mut frames, mut coeffs) = (0usize, 0usize);
    let status = unsafe {
        serkit_mfcc(
            samples.as_ptr(),
            samples.len(),
            &cfg,
            ptr::null_mut(),
            0,
            &mut frames,
            &mut coeffs,
        )
    };
    assert_eq!(status, SerkitStatus::Ok, "{}", last_error());
    assert_eq!((frames, coeffs), (13, 13), "1 + 1600/128 frames");

    // Undersized buffer is rejected, exact size succeeds.
    let mut undersized = vec![0.0; frames * coeffs - 1];
    let status = unsafe {
        serkit_mfcc(
            samples.as_ptr(),
            samples.len(),
            &cfg,
            undersized.as_mut_ptr(),
            undersized.len(),
            &mut frames,
            &mut coeffs,
        )
    };
    assert_eq!(status, SerkitStatus::BufferTooSmall);

    let mut buffer = vec![0.0; frames * coeffs];
    let status = unsafe {
        serkit_mfcc(
            samples.as_ptr(),
            samples.len(),
            &cfg,
            buffer.as_mut_ptr(),
            buffer.len(),
            &mut frames,
            &mut coeffs,
        )
    };
    assert_eq!(status, SerkitStatus::Ok);

    // Row-major layout matches the library output bit for bit.
    let clip = AudioClip::new(samples.clone(), 8000).unwrap();
    let want = mfcc(&clip, &small_feature_config()).unwrap();
    assert_eq!(buffer, want.frames.as_slice().unwrap());

    // A fixed duration pads the clip: 0.5 s at 8 kHz is 32 frames.
    let cfg = small_cfg(0.5);
    let status = unsafe {
        serkit_mfcc(
            samples.as_ptr(),
            samples.len(),
            &cfg,
            ptr::null_mut(),
            0,
            &mut frames,
            &mut coeffs,
        )
    };
    assert_eq!(status, SerkitStatus::Ok);
    assert_eq!((frames, coeffs), (32, 13));
}

#[test]
fn failures_set_status_codes_and_messages() {
    let dir = tempfile::tempdir().unwrap();

    // Missing and malformed model files.
    let mut handle: *mut SerkitModel = ptr::null_mut();
    let missing = c_path(&dir.path().join("nope.json"));
    assert_eq!(
        unsafe { serkit_model_load(missing.as_ptr(), &mut handle) },
        SerkitStatus::Io
    );
    assert!(!last_error().is_empty());
    assert!(handle.is_null());

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, b"{\"schema_version\": 1, \"kind\": \"sandwich\"}").unwrap();
    assert_eq!(
        unsafe { serkit_model_load(c_path(&garbage).as_ptr(), &mut handle) },
        SerkitStatus::InvalidModel
    );

    // Null-pointer contracts.
    assert_eq!(
        unsafe { serkit_model_load(ptr::null(), &mut handle) },
        SerkitStatus::NullArgument
    );
    assert!(unsafe { serkit_model_kind(ptr::null()) }.is_null());
    assert_eq!(unsafe { serkit_model_n_labels(ptr::null()) }, 0);
    assert!(unsafe { serkit_model_label(ptr::null(), 0) }.is_null());
    assert_eq!(
        unsafe { serkit_model_expected_shape(ptr::null(), ptr::null_mut(), ptr::null_mut()) },
        SerkitStatus::NullArgument
    );
    unsafe { serkit_model_free(ptr::null_mut()) };

    // A real model rejects inputs whose shape it was not trained for.
    let model_path = dir.path().join("model.json");
    let mut rng = stream_rng(3, 2);
    let model = ModelState::init(13, 32, seven_labels(), &mut rng);
    save_lstm(&model_path, &model).unwrap();
    let status = unsafe { serkit_model_load(c_path(&model_path).as_ptr(), &mut handle) };
    assert_eq!(status, SerkitStatus::Ok);

    let samples = vec![0.25f64; 4000];
    let mut winner = 0usize;
    let long_cfg = small_cfg(1.0); // 63 frames, model expects 32
    let status = unsafe {
        serkit_predict_samples(
            handle,
            samples.as_ptr(),
            samples.len(),
            &long_cfg,
            ptr::null_mut(),
            0,
            &mut winner,
        )
    };
    assert_eq!(status, SerkitStatus::ShapeMismatch);
    assert!(last_error().contains("frames"), "{}", last_error());

    // Scores buffer smaller than the label count.
    let mut short_scores = [0.0f64; 3];
    let status = unsafe {
        serkit_predict_samples(
            handle,
            samples.as_ptr(),
            samples.len(),
            &small_cfg(0.5),
            short_scores.as_mut_ptr(),
            short_scores.len(),
            &mut winner,
        )
    };
    assert_eq!(status, SerkitStatus::BufferTooSmall);

    // Missing audio file.
    let missing_wav = c_path(&dir.path().join("nope.wav"));
    let status = unsafe {
        serkit_predict_wav(
            handle,
            missing_wav.as_ptr(),
            &small_cfg(0.5),
            ptr::null_mut(),
            0,
            &mut winner,
        )
    };
    assert_eq!(status, SerkitStatus::Io);

    // Invalid extraction settings and unusable samples.
    let mut bad_cfg = small_cfg(0.0);
    bad_cfg.n_fft = 100; // not a power of two
    let (mut frames, mut coeffs) = (0usize, 0usize);
    let status = unsafe {
        serkit_mfcc(
            samples.as_ptr(),
            samples.len(),
            &bad_cfg,
            ptr::null_mut(),
            0,
            &mut frames,
            &mut coeffs,
        )
    };
    assert_eq!(status, SerkitStatus::InvalidConfig);

    let bad_samples = [f64::NAN; 100];
    let status = unsafe {
        serkit_mfcc(
            bad_samples.as_ptr(),
            bad_samples.len(),
            &small_cfg(0.0),
            ptr::null_mut(),
            0,
            &mut frames,
            &mut coeffs,
        )
    };
    assert_eq!(status, SerkitStatus::InvalidAudio);

    unsafe { serkit_model_free(handle) };
}
