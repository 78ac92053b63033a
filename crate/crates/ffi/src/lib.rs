//! C interface for the speech emotion recognition toolkit.
//!
//! Conventions:
//! - Every fallible call returns a [`SerkitStatus`]; `SERKIT_STATUS_OK` is 0.
//!   On failure a human-readable message is stored per thread and can be
//!   fetched with [`serkit_last_error`].
//! - Models are opaque handles created by [`serkit_model_load`] and released
//!   with [`serkit_model_free`]. Strings returned for a model stay valid
//!   until that model is freed.
//! - Feature buffers are row-major `f64` arrays, one frame per row.
//! - Panics never cross the boundary; they surface as `SERKIT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use serkit::audio::{load_wav, resample, AudioClip, AudioError};
use serkit::dataset::model_io::{load_model, LoadedModel, ModelIoError};
use serkit::features::{mean_pool, mfcc, FeatureConfig, FeatureError, MfccSequence};
use serkit::model::{predict, ModelError};
use serkit::svm::{svm_predict_with_votes, SvmError};

/// Result codes returned by every fallible function in this library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerkitStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The file could not be read or written.
    Io = 3,
    /// The model file exists but does not describe a usable model.
    InvalidModel = 4,
    /// The audio could not be decoded or is unusable (empty, non-finite).
    InvalidAudio = 5,
    /// The feature configuration is inconsistent.
    InvalidConfig = 6,
    /// The input's shape does not match what the model was trained on.
    ShapeMismatch = 7,
    /// An output buffer is too small for the result.
    BufferTooSmall = 8,
    /// An internal invariant failed; the library state is still usable.
    Panic = 9,
}

/// Feature extraction settings; fill with [`serkit_feature_config_default`]
/// and adjust as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SerkitFeatureConfig {
    /// Sample rate the extractor operates at, in Hz.
    pub sample_rate: u32,
    /// FFT length in samples (a power of two).
    pub n_fft: usize,
    /// Hop between adjacent frames in samples.
    pub hop_length: usize,
    /// Number of triangular mel filters.
    pub n_mels: usize,
    /// Number of cepstral coefficients kept per frame.
    pub n_mfcc: usize,
    /// Lower edge of the mel filterbank in Hz.
    pub fmin: f64,
    /// Upper edge of the mel filterbank in Hz (at most Nyquist).
    pub fmax: f64,
    /// Clips are zero-padded or truncated to this many seconds before
    /// extraction; 0 keeps the natural length.
    pub duration: f64,
}

/// An opaque loaded classifier (sequence model or baseline).
pub struct SerkitModel {
    inner: LoadedModel,
    labels: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: SerkitStatus, msg: impl Into<String>) -> SerkitStatus {
    let msg: String = msg.into();
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
    status
}

fn guarded(f: impl FnOnce() -> SerkitStatus) -> SerkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SerkitStatus::Panic, "internal panic"),
    }
}

fn audio_status(e: &AudioError) -> SerkitStatus {
    match e {
        AudioError::Io(_) => SerkitStatus::Io,
        _ => SerkitStatus::InvalidAudio,
    }
}

fn feature_status(e: &FeatureError) -> SerkitStatus {
    match e {
        FeatureError::InvalidConfig(_) => SerkitStatus::InvalidConfig,
        _ => SerkitStatus::InvalidAudio,
    }
}

fn model_io_status(e: &ModelIoError) -> SerkitStatus {
    match e {
        ModelIoError::Io { .. } => SerkitStatus::Io,
        _ => SerkitStatus::InvalidModel,
    }
}

fn model_status(e: &ModelError) -> SerkitStatus {
    match e {
        ModelError::DimensionMismatch(_) => SerkitStatus::ShapeMismatch,
        _ => SerkitStatus::InvalidModel,
    }
}

fn svm_status(e: &SvmError) -> SerkitStatus {
    match e {
        SvmError::DimensionMismatch(_) => SerkitStatus::ShapeMismatch,
        _ => SerkitStatus::InvalidModel,
    }
}

/// Converts and validates the C-side configuration, leaving `duration`
/// to the caller.
fn feature_config(cfg: &SerkitFeatureConfig) -> Result<FeatureConfig, SerkitStatus> {
    if !(cfg.duration.is_finite() && cfg.duration >= 0.0) {
        return Err(fail(
            SerkitStatus::InvalidConfig,
            format!(
                "duration must be finite and non-negative, got {}",
                cfg.duration
            ),
        ));
    }
    let out = FeatureConfig {
        sample_rate: cfg.sample_rate,
        n_fft: cfg.n_fft,
        hop_length: cfg.hop_length,
        n_mels: cfg.n_mels,
        n_mfcc: cfg.n_mfcc,
        fmin: cfg.fmin,
        fmax: cfg.fmax,
        power_floor: 1e-10,
    };
    out.validate()
        .map_err(|e| fail(feature_status(&e), e.to_string()))?;
    Ok(out)
}

fn extract(
    clip: &AudioClip,
    cfg: &FeatureConfig,
    duration: f64,
) -> Result<MfccSequence, SerkitStatus> {
    let fixed;
    let clip = if duration > 0.0 {
        fixed = clip.fix_length(duration);
        &fixed
    } else {
        clip
    };
    mfcc(clip, cfg).map_err(|e| fail(feature_status(&e), e.to_string()))
}

/// Classifies an extracted sequence; returns the winning label index and
/// one score per label (probabilities for the sequence model, vote shares
/// for the baseline).
fn classify(model: &SerkitModel, seq: &MfccSequence) -> Result<(usize, Vec<f64>), SerkitStatus> {
    match &model.inner {
        LoadedModel::Lstm(m) => {
            if seq.n_coeffs() != m.input_size() {
                return Err(fail(
                    SerkitStatus::ShapeMismatch,
                    format!(
                        "{} coefficients per frame, model expects {}",
                        seq.n_coeffs(),
                        m.input_size()
                    ),
                ));
            }
            if seq.n_frames() != m.n_frames {
                return Err(fail(
                    SerkitStatus::ShapeMismatch,
                    format!(
                        "{} frames, model expects {}; adjust duration/hop settings",
                        seq.n_frames(),
                        m.n_frames
                    ),
                ));
            }
            predict(m, seq.frames.view()).map_err(|e| fail(model_status(&e), e.to_string()))
        }
        LoadedModel::Svm(m) => {
            if seq.n_coeffs() != m.scaler.mean.len() {
                return Err(fail(
                    SerkitStatus::ShapeMismatch,
                    format!(
                        "{} coefficients per frame, model expects {}",
                        seq.n_coeffs(),
                        m.scaler.mean.len()
                    ),
                ));
            }
            let pooled = mean_pool(seq).map_err(|e| fail(feature_status(&e), e.to_string()))?;
            let d = pooled.len();
            let x = ndarray::Array2::from_shape_vec((1, d), pooled).expect("one pooled row");
            let mut rows =
                svm_predict_with_votes(m, &x).map_err(|e| fail(svm_status(&e), e.to_string()))?;
            Ok(rows.pop().expect("one row in, one row out"))
        }
    }
}

/// Writes the winner index and per-label scores to whichever of the two
/// output arguments are non-null.
unsafe fn emit(
    result: (usize, Vec<f64>),
    scores_out: *mut f64,
    scores_capacity: usize,
    winner_out: *mut usize,
) -> SerkitStatus {
    let (winner, scores) = result;
    if !scores_out.is_null() {
        if scores_capacity < scores.len() {
            return fail(
                SerkitStatus::BufferTooSmall,
                format!(
                    "scores buffer holds {scores_capacity}, need {}",
                    scores.len()
                ),
            );
        }
        std::ptr::copy_nonoverlapping(scores.as_ptr(), scores_out, scores.len());
    }
    if !winner_out.is_null() {
        *winner_out = winner;
    }
    SerkitStatus::Ok
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn serkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the message for the most recent failure on this thread (empty
/// string if none). The pointer stays valid until the next failing serkit
/// call on the same thread.
#[no_mangle]
pub extern "C" fn serkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fills `out` with the standard extraction settings for `sample_rate`:
/// 2048-point FFT, 512-sample hop, 128 mel filters up to Nyquist, 40
/// coefficients, 3-second clips.
///
/// # Safety
/// `out` must be null or valid for writing one `SerkitFeatureConfig`.
#[no_mangle]
pub unsafe extern "C" fn serkit_feature_config_default(
    sample_rate: u32,
    out: *mut SerkitFeatureConfig,
) -> SerkitStatus {
    if out.is_null() {
        return fail(SerkitStatus::NullArgument, "out is null");
    }
    if sample_rate == 0 {
        return fail(SerkitStatus::InvalidConfig, "sample_rate must be positive");
    }
    let cfg = FeatureConfig::new(sample_rate);
    *out = SerkitFeatureConfig {
        sample_rate,
        n_fft: cfg.n_fft,
        hop_length: cfg.hop_length,
        n_mels: cfg.n_mels,
        n_mfcc: cfg.n_mfcc,
        fmin: cfg.fmin,
        fmax: cfg.fmax,
        duration: 3.0,
    };
    SerkitStatus::Ok
}

/// Loads a model file (either kind) and stores the new handle in `out`.
/// The handle must be released with [`serkit_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writing
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn serkit_model_load(
    path: *const c_char,
    out: *mut *mut SerkitModel,
) -> SerkitStatus {
    if path.is_null() || out.is_null() {
        return fail(SerkitStatus::NullArgument, "path and out must be non-null");
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(SerkitStatus::InvalidUtf8, "path is not valid UTF-8");
    };
    guarded(|| match load_model(Path::new(path)) {
        Ok(inner) => {
            let labels = inner
                .labels()
                .iter()
                .map(|l| CString::new(l.replace('\0', " ")).unwrap_or_default())
                .collect();
            *out = Box::into_raw(Box::new(SerkitModel { inner, labels }));
            SerkitStatus::Ok
        }
        Err(e) => fail(model_io_status(&e), e.to_string()),
    })
}

/// Releases a handle returned by [`serkit_model_load`]. Null is a no-op.
///
/// # Safety
/// `model` must be null or a pointer previously returned by
/// [`serkit_model_load`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn serkit_model_free(model: *mut SerkitModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Returns the model kind as a static string: "lstm" for the sequence
/// model or "svm" for the baseline. Null input yields null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn serkit_model_kind(model: *const SerkitModel) -> *const c_char {
    if model.is_null() {
        return std::ptr::null();
    }
    match (&*model).inner {
        LoadedModel::Lstm(_) => c"lstm".as_ptr(),
        LoadedModel::Svm(_) => c"svm".as_ptr(),
    }
}

/// Returns the number of labels the model distinguishes (0 for null).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn serkit_model_n_labels(model: *const SerkitModel) -> usize {
    if model.is_null() {
        0
    } else {
        (&*model).labels.len()
    }
}

/// Returns label `index`, or null when the handle is null or the index is
/// out of range. The string stays valid until the model is freed.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn serkit_model_label(
    model: *const SerkitModel,
    index: usize,
) -> *const c_char {
    if model.is_null() {
        return std::ptr::null();
    }
    match (&*model).labels.get(index) {
        Some(label) => label.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Reports the input shape the model expects: frames per sequence (0 when
/// any length is accepted, as for the baseline) and coefficients per frame.
///
/// # Safety
/// `model` must be a live handle; shape outputs may each be null.
#[no_mangle]
pub unsafe extern "C" fn serkit_model_expected_shape(
    model: *const SerkitModel,
    frames_out: *mut usize,
    coeffs_out: *mut usize,
) -> SerkitStatus {
    if model.is_null() {
        return fail(SerkitStatus::NullArgument, "model is null");
    }
    let (frames, coeffs) = match &(*model).inner {
        LoadedModel::Lstm(m) => (m.n_frames, m.input_size()),
        LoadedModel::Svm(m) => (0, m.scaler.mean.len()),
    };
    if !frames_out.is_null() {
        *frames_out = frames;
    }
    if !coeffs_out.is_null() {
        *coeffs_out = coeffs;
    }
    SerkitStatus::Ok
}

/// Extracts MFCC features from raw samples (assumed to be at
/// `cfg->sample_rate`). The frame and coefficient counts are always written
/// on success; pass a null `out` to query them without copying. With a
/// non-null `out`, `out_capacity` must be at least frames * coefficients and
/// the features are written row-major, one frame per row.
///
/// # Safety
/// `samples` must point to `n_samples` doubles; `cfg`, `frames_out` and
/// `coeffs_out` must be valid; `out` must be null or valid for
/// `out_capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn serkit_mfcc(
    samples: *const f64,
    n_samples: usize,
    cfg: *const SerkitFeatureConfig,
    out: *mut f64,
    out_capacity: usize,
    frames_out: *mut usize,
    coeffs_out: *mut usize,
) -> SerkitStatus {
    if samples.is_null() || cfg.is_null() || frames_out.is_null() || coeffs_out.is_null() {
        return fail(
            SerkitStatus::NullArgument,
            "samples, cfg, frames_out and coeffs_out must be non-null",
        );
    }
    guarded(|| {
        let c_cfg = *cfg;
        let cfg = match feature_config(&c_cfg) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let samples = std::slice::from_raw_parts(samples, n_samples);
        let clip = match AudioClip::new(samples.to_vec(), cfg.sample_rate) {
            Ok(c) => c,
            Err(e) => return fail(audio_status(&e), e.to_string()),
        };
        let seq = match extract(&clip, &cfg, c_cfg.duration) {
            Ok(s) => s,
            Err(status) => return status,
        };
        *frames_out = seq.n_frames();
        *coeffs_out = seq.n_coeffs();
        if out.is_null() {
            return SerkitStatus::Ok;
        }
        let needed = seq.n_frames() * seq.n_coeffs();
        if out_capacity < needed {
            return fail(
                SerkitStatus::BufferTooSmall,
                format!("feature buffer holds {out_capacity}, need {needed}"),
            );
        }
        let flat = seq.frames.as_slice().expect("row-major features");
        std::ptr::copy_nonoverlapping(flat.as_ptr(), out, needed);
        SerkitStatus::Ok
    })
}

/// Classifies raw samples (assumed to be at `cfg->sample_rate`). Writes the
/// winning label index to `winner_out` and one score per label to
/// `scores_out` (probabilities for the sequence model, pairwise vote shares
/// for the baseline); either output may be null to skip it.
///
/// # Safety
/// `model` and `cfg` must be valid; `samples` must point to `n_samples`
/// doubles; `scores_out` must be null or valid for `scores_capacity`
/// doubles; `winner_out` must be null or valid for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn serkit_predict_samples(
    model: *const SerkitModel,
    samples: *const f64,
    n_samples: usize,
    cfg: *const SerkitFeatureConfig,
    scores_out: *mut f64,
    scores_capacity: usize,
    winner_out: *mut usize,
) -> SerkitStatus {
    if model.is_null() || samples.is_null() || cfg.is_null() {
        return fail(
            SerkitStatus::NullArgument,
            "model, samples and cfg must be non-null",
        );
    }
    guarded(|| {
        let c_cfg = *cfg;
        let cfg = match feature_config(&c_cfg) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let samples = std::slice::from_raw_parts(samples, n_samples);
        let clip = match AudioClip::new(samples.to_vec(), cfg.sample_rate) {
            Ok(c) => c,
            Err(e) => return fail(audio_status(&e), e.to_string()),
        };
        let seq = match extract(&clip, &cfg, c_cfg.duration) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match classify(&*model, &seq) {
            Ok(result) => emit(result, scores_out, scores_capacity, winner_out),
            Err(status) => status,
        }
    })
}

/// Classifies a WAV file: decodes it, resamples to `cfg->sample_rate`,
/// applies `cfg->duration`, extracts features and runs the model. Output
/// arguments behave as in [`serkit_predict_samples`].
///
/// # Safety
/// `model` and `cfg` must be valid; `wav_path` must be a NUL-terminated
/// string; `scores_out` must be null or valid for `scores_capacity`
/// doubles; `winner_out` must be null or valid for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn serkit_predict_wav(
    model: *const SerkitModel,
    wav_path: *const c_char,
    cfg: *const SerkitFeatureConfig,
    scores_out: *mut f64,
    scores_capacity: usize,
    winner_out: *mut usize,
) -> SerkitStatus {
    if model.is_null() || wav_path.is_null() || cfg.is_null() {
        return fail(
            SerkitStatus::NullArgument,
            "model, wav_path and cfg must be non-null",
        );
    }
    let Ok(path) = CStr::from_ptr(wav_path).to_str() else {
        return fail(SerkitStatus::InvalidUtf8, "wav_path is not valid UTF-8");
    };
    guarded(|| {
        let c_cfg = *cfg;
        let cfg = match feature_config(&c_cfg) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let clip = match load_wav(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return fail(audio_status(&e), format!("{path}: {e}")),
        };
        let clip = resample(&clip, cfg.sample_rate);
        let seq = match extract(&clip, &cfg, c_cfg.duration) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match classify(&*model, &seq) {
            Ok(result) => emit(result, scores_out, scores_capacity, winner_out),
            Err(status) => status,
        }
    })
}
