//! Command-line orchestration of the full pipeline: feature extraction,
//! LSTM training, evaluation, single-file prediction, the SVM baseline,
//! and synthetic-corpus generation.
//!
//! Conventions shared by every subcommand:
//! - deterministic under fixed flags; `--seed` defaults to 42, never the
//!   clock, and `--jobs` never changes results, only wall time;
//! - progress goes to standard error, machine-readable results to
//!   standard output;
//! - flags win over `--config <json file>` values, which win over the
//!   documented defaults;
//! - output files are written to a temp sibling and renamed, so a failed
//!   run never leaves a partial file behind;
//! - exit codes: 0 success, 2 bad input data (corpus, cache, or model
//!   file contents), 3 I/O failure, 4 bad configuration, 5 model/data
//!   mismatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array2, ArrayView2};
use serde::Deserialize;

use crate::audio::{load_wav, resample, write_wav_pcm16, AudioError};
use crate::dataset::cache::{write_atomic, CacheError, FeatureCache};
use crate::dataset::model_io::{load_model, save_lstm, save_svm, LoadedModel, ModelIoError};
use crate::dataset::{generate_synthetic, scan_corpus, DatasetError, EmotionLabel, ManifestEntry};
use crate::eval::{ConfusionMatrix, EvalError};
use crate::features::{mean_pool, mfcc, FeatureConfig, FeatureError, MfccSequence};
use crate::model::{predict, ModelState};
use crate::rng::DEFAULT_SEED;
use crate::svm::{svm_fit, svm_predict, svm_predict_with_votes, SvmConfig, SvmError, SvmModel};
use crate::train::{
    predict_classes, run_units, stratified_split, train, Sample, TrainConfig, TrainError,
};

/// Files per unit of parallel extraction work. Fixed, so unit boundaries
/// (and therefore output order) never depend on `--jobs`.
const EXTRACT_UNIT_FILES: usize = 8;

/// An error plus the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: unreadable or malformed input data.
    Input(String),
    /// Exit 3: filesystem failure.
    Io(String),
    /// Exit 4: invalid flag or config value.
    Config(String),
    /// Exit 5: the model does not fit the data it was pointed at.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
            CliError::Config(_) => 4,
            CliError::Mismatch(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Io(m) | CliError::Config(m) | CliError::Mismatch(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        match e {
            CacheError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ModelIoError> for CliError {
    fn from(e: ModelIoError) -> Self {
        match e {
            ModelIoError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SvmError> for CliError {
    fn from(e: SvmError) -> Self {
        match e {
            SvmError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn audio_error(path: &Path, e: AudioError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        AudioError::Io(_) => CliError::Io(msg),
        _ => CliError::Input(msg),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "serkit",
    version,
    about = "Speech emotion recognition toolkit: MFCC features, an LSTM classifier, and an SVM baseline"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan a WAV corpus and write an MFCC feature cache
    Extract(ExtractArgs),
    /// Train the LSTM classifier from a feature cache
    Train(TrainArgs),
    /// Evaluate a saved model against a feature cache
    Eval(EvalArgs),
    /// Classify one WAV file with a saved model
    Predict(PredictArgs),
    /// SVM baseline over mean-pooled features
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Generate the synthetic benchmark corpus
    Synth(SynthArgs),
}

#[derive(Subcommand, Debug)]
enum BaselineCommand {
    /// Fit the SVM baseline on the training side of the stratified split
    Train(BaselineTrainArgs),
    /// Evaluate a saved SVM baseline against a feature cache
    Eval(EvalArgs),
}

#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// RNG seed; fixed default keeps bare runs reproducible
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (never changes results, only speed) [default: 1]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON config file supplying defaults for unset flags
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct FeatureFlags {
    /// Pipeline sample rate in Hz [default: 22050]
    #[arg(long)]
    sample_rate: Option<u32>,
    /// FFT frame size in samples; power of two [default: 2048]
    #[arg(long)]
    n_fft: Option<usize>,
    /// Samples between frame starts [default: 512]
    #[arg(long)]
    hop_length: Option<usize>,
    /// Number of triangular mel filters [default: 128]
    #[arg(long)]
    n_mels: Option<usize>,
    /// Cepstral coefficients kept per frame [default: 40]
    #[arg(long)]
    n_mfcc: Option<usize>,
    /// Lower filterbank edge in Hz [default: 0]
    #[arg(long)]
    fmin: Option<f64>,
    /// Upper filterbank edge in Hz [default: Nyquist]
    #[arg(long)]
    fmax: Option<f64>,
    /// Fixed clip length in seconds; clips are padded or truncated to
    /// this before extraction [default: 3]
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Directory scanned recursively for label-named .wav files
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Output feature cache path
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[command(flatten)]
    features: FeatureFlags,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Input feature cache
    #[arg(long, value_name = "PATH")]
    cache: PathBuf,
    /// Where to write the trained model JSON
    #[arg(long, value_name = "PATH")]
    out_model: PathBuf,
    /// Optional per-epoch metrics CSV
    #[arg(long, value_name = "PATH")]
    metrics: Option<PathBuf>,
    /// Training epochs [default: 100]
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size [default: 512]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Held-out fraction per class [default: 0.2]
    #[arg(long)]
    test_fraction: Option<f64>,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitChoice {
    Test,
    Train,
    All,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Saved model JSON
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Feature cache to evaluate against
    #[arg(long, value_name = "PATH")]
    cache: PathBuf,
    /// Which side of the stratified split to use
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    split: SplitChoice,
    /// Held-out fraction per class; must match training [default: 0.2]
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Also write the confusion matrix as long-form CSV here
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Also write the full JSON report here
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Saved model JSON
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// WAV file to classify
    #[arg(long, value_name = "PATH")]
    wav: PathBuf,
    #[command(flatten)]
    features: FeatureFlags,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Debug)]
struct BaselineTrainArgs {
    /// Input feature cache
    #[arg(long, value_name = "PATH")]
    cache: PathBuf,
    /// Where to write the trained model JSON
    #[arg(long, value_name = "PATH")]
    out_model: PathBuf,
    /// Soft-margin penalty [default: 10]
    #[arg(long)]
    svm_c: Option<f64>,
    /// KKT violation tolerance [default: 0.001]
    #[arg(long)]
    svm_tol: Option<f64>,
    /// Held-out fraction per class [default: 0.2]
    #[arg(long)]
    test_fraction: Option<f64>,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Write 16-bit PCM WAVs plus manifest.csv into this directory
    #[arg(long, value_name = "DIR", conflicts_with = "features")]
    out_dir: Option<PathBuf>,
    /// Skip WAV files and write an MFCC feature cache directly here
    #[arg(long, value_name = "PATH")]
    features: Option<PathBuf>,
    /// Clips per emotion class [default: 10]
    #[arg(long)]
    n_per_class: Option<usize>,
    /// Generated clip length in seconds [default: 1.5]
    #[arg(long)]
    clip_duration: Option<f64>,
    #[command(flatten)]
    feature_flags: FeatureFlags,
    #[command(flatten)]
    common: CommonFlags,
}

/// Values accepted in a `--config` JSON file. Unknown keys are rejected
/// so typos fail loudly instead of being ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    sample_rate: Option<u32>,
    n_fft: Option<usize>,
    hop_length: Option<usize>,
    n_mels: Option<usize>,
    n_mfcc: Option<usize>,
    fmin: Option<f64>,
    fmax: Option<f64>,
    duration: Option<f64>,
    clip_duration: Option<f64>,
    n_per_class: Option<usize>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    test_fraction: Option<f64>,
    svm_c: Option<f64>,
    svm_tol: Option<f64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config file {}: {e}", path.display())))
}

/// Flag value if set, else the config-file value, else the default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn feature_config(flags: &FeatureFlags, file: &FileConfig) -> Result<FeatureConfig, CliError> {
    let mut cfg = FeatureConfig::new(pick(flags.sample_rate, file.sample_rate, 22_050));
    cfg.n_fft = pick(flags.n_fft, file.n_fft, cfg.n_fft);
    cfg.hop_length = pick(flags.hop_length, file.hop_length, cfg.hop_length);
    cfg.n_mels = pick(flags.n_mels, file.n_mels, cfg.n_mels);
    cfg.n_mfcc = pick(flags.n_mfcc, file.n_mfcc, cfg.n_mfcc);
    cfg.fmin = pick(flags.fmin, file.fmin, cfg.fmin);
    cfg.fmax = pick(flags.fmax, file.fmax, cfg.fmax);
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn duration_value(flag: Option<f64>, file: Option<f64>, default: f64) -> Result<f64, CliError> {
    let d = pick(flag, file, default);
    if !(d > 0.0 && d.is_finite()) {
        return Err(CliError::Config(format!(
            "duration must be positive, got {d}"
        )));
    }
    Ok(d)
}

fn jobs_value(common: &CommonFlags, file: &FileConfig) -> Result<usize, CliError> {
    let jobs = pick(common.jobs, file.jobs, 1);
    if jobs == 0 {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    Ok(jobs)
}

/// FNV-1a (64-bit) over the indices as little-endian u64s. Both trainers
/// print this for the test split, so split identity across runs can be
/// checked by eye or by scripts.
fn fnv1a64_indices(indices: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in indices {
        for b in (i as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parses `argv` and runs the selected command, returning the process
/// exit code. Usage errors exit 4; `--help`/`--version` exit 0.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args, None),
        Command::Predict(args) => cmd_predict(args),
        Command::Baseline(BaselineCommand::Train(args)) => cmd_baseline_train(args),
        Command::Baseline(BaselineCommand::Eval(args)) => cmd_eval(args, Some("svm")),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn extract_features(
    entries: &[ManifestEntry],
    cfg: &FeatureConfig,
    duration_s: f64,
    jobs: usize,
) -> Result<Vec<Array2<f64>>, CliError> {
    let n_units = entries.len().div_ceil(EXTRACT_UNIT_FILES);
    let outs = run_units(n_units, jobs, |unit| {
        let lo = unit * EXTRACT_UNIT_FILES;
        let hi = (lo + EXTRACT_UNIT_FILES).min(entries.len());
        let mut part = Vec::with_capacity(hi - lo);
        for entry in &entries[lo..hi] {
            let clip = load_wav(&entry.path).map_err(|e| audio_error(&entry.path, e))?;
            let clip = resample(&clip, cfg.sample_rate);
            let clip = clip.fix_length(duration_s);
            let seq = mfcc(&clip, cfg)?;
            part.push(seq.frames);
        }
        Ok::<_, CliError>(part)
    });
    let mut all = Vec::with_capacity(entries.len());
    for out in outs {
        all.extend(out?);
    }
    Ok(all)
}

fn build_cache(
    features: Vec<Array2<f64>>,
    labels: Vec<u8>,
    cfg: &FeatureConfig,
) -> Result<FeatureCache, CliError> {
    let (t, d) = (features[0].nrows(), features[0].ncols());
    let mut data = Vec::with_capacity(features.len() * t * d);
    for f in &features {
        data.extend(f.iter().copied());
    }
    Ok(FeatureCache::new(t, d, data, labels, cfg.content_hash())?)
}

fn cmd_extract(args: &ExtractArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let cfg = feature_config(&args.features, &file)?;
    let duration_s = duration_value(args.features.duration, file.duration, 3.0)?;
    let jobs = jobs_value(&args.common, &file)?;

    let manifest = scan_corpus(&args.corpus)?;
    eprintln!(
        "extracting features from {} clips with {jobs} worker(s)",
        manifest.len()
    );
    let features = extract_features(&manifest.entries, &cfg, duration_s, jobs)?;
    let labels: Vec<u8> = manifest
        .entries
        .iter()
        .map(|e| e.label.index() as u8)
        .collect();
    let cache = build_cache(features, labels, &cfg)?;
    cache.write(&args.out)?;
    eprintln!("wrote feature cache to {}", args.out.display());
    println!(
        "N={} t={} d={}",
        cache.n_samples(),
        cache.n_frames(),
        cache.n_coeffs()
    );
    Ok(())
}

/// Cache labels as class indices, checked against the label vocabulary.
fn cache_labels(cache: &FeatureCache, n_classes: usize) -> Result<Vec<usize>, CliError> {
    let labels: Vec<usize> = cache.labels().iter().map(|&b| b as usize).collect();
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(CliError::Input(format!(
            "cache label {bad} out of range for {n_classes} classes"
        )));
    }
    Ok(labels)
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, DEFAULT_SEED);
    let jobs = jobs_value(&args.common, &file)?;
    let test_fraction = pick(args.test_fraction, file.test_fraction, 0.2);
    let cfg = TrainConfig {
        epochs: pick(args.epochs, file.epochs, 100),
        batch_size: pick(args.batch_size, file.batch_size, 512),
        learning_rate: pick(args.learning_rate, file.learning_rate, 1e-3),
        seed,
        jobs,
        ..TrainConfig::default()
    };
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let cache = FeatureCache::read(&args.cache)?;
    let labels = cache_labels(&cache, EmotionLabel::ALL.len())?;
    let (train_idx, test_idx) =
        stratified_split(&labels, EmotionLabel::ALL.len(), test_fraction, seed)?;
    println!("test_checksum=fnv1a64:{:016x}", fnv1a64_indices(&test_idx));

    let views: Vec<ArrayView2<f64>> = (0..cache.n_samples()).map(|i| cache.sample(i)).collect();
    let train_set: Vec<Sample> = train_idx.iter().map(|&i| (views[i], labels[i])).collect();
    let test_set: Vec<Sample> = test_idx.iter().map(|&i| (views[i], labels[i])).collect();
    eprintln!(
        "training on {} clips, validating on {} ({} epochs, batch size {}, {jobs} worker(s))",
        train_set.len(),
        test_set.len(),
        cfg.epochs,
        cfg.batch_size
    );

    let mut csv = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    println!("epoch,train_loss,train_acc,val_loss,val_acc");
    let (model, history) = train(&train_set, &test_set, EmotionLabel::names(), &cfg, |m| {
        let line = format!(
            "{},{:.6},{:.6},{:.6},{:.6}",
            m.epoch, m.train_loss, m.train_acc, m.val_loss, m.val_acc
        );
        println!("{line}");
        csv.push_str(&line);
        csv.push('\n');
    })?;

    if let Some(path) = &args.metrics {
        write_text_atomic(path, &csv)?;
        eprintln!("wrote metrics to {}", path.display());
    }
    save_lstm(&args.out_model, &model)?;
    eprintln!("wrote model to {}", args.out_model.display());

    let last = history.last().expect("at least one epoch");
    println!("Training Accuracy: {:.2}%", 100.0 * last.train_acc);
    println!("Training Loss: {:.4}", last.train_loss);
    println!("Validation Accuracy: {:.2}%", 100.0 * last.val_acc);
    println!("Validation Loss: {:.4}", last.val_loss);
    Ok(())
}

/// Mean-pools every sequence view into one row of an `n x d` matrix.
fn pooled_matrix(views: &[ArrayView2<f64>]) -> Result<Array2<f64>, CliError> {
    let d = views.first().map(|v| v.ncols()).unwrap_or(0);
    let mut out = Array2::zeros((views.len(), d));
    for (i, view) in views.iter().enumerate() {
        let seq = MfccSequence {
            frames: view.to_owned(),
        };
        let pooled = mean_pool(&seq).map_err(|e| CliError::Input(e.to_string()))?;
        for (j, v) in pooled.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

fn check_lstm_fits(model: &ModelState, n_frames: usize, n_coeffs: usize) -> Result<(), CliError> {
    if n_coeffs != model.input_size() {
        return Err(CliError::Mismatch(format!(
            "data has {n_coeffs} coefficients per frame, model expects {}",
            model.input_size()
        )));
    }
    if n_frames != model.n_frames {
        return Err(CliError::Mismatch(format!(
            "data has {n_frames} frames per clip, model expects {}",
            model.n_frames
        )));
    }
    Ok(())
}

fn check_svm_fits(model: &SvmModel, n_coeffs: usize) -> Result<(), CliError> {
    if n_coeffs != model.scaler.mean.len() {
        return Err(CliError::Mismatch(format!(
            "data has {n_coeffs} coefficients per frame, model expects {}",
            model.scaler.mean.len()
        )));
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, require_kind: Option<&str>) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, DEFAULT_SEED);
    let jobs = jobs_value(&args.common, &file)?;
    let test_fraction = pick(args.test_fraction, file.test_fraction, 0.2);

    let model = load_model(&args.model)?;
    if let Some(kind) = require_kind {
        if model.kind() != kind {
            return Err(CliError::Mismatch(format!(
                "this command needs a {kind} model, got {}",
                model.kind()
            )));
        }
    }
    let cache = FeatureCache::read(&args.cache)?;
    let n_classes = model.labels().len();
    let labels = cache_labels(&cache, n_classes)?;

    let indices: Vec<usize> = match args.split {
        SplitChoice::All => (0..cache.n_samples()).collect(),
        choice => {
            let (train_idx, test_idx) = stratified_split(&labels, n_classes, test_fraction, seed)?;
            if choice == SplitChoice::Train {
                train_idx
            } else {
                test_idx
            }
        }
    };
    let views: Vec<ArrayView2<f64>> = indices.iter().map(|&i| cache.sample(i)).collect();
    let actual: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
    eprintln!("evaluating {} clips with {jobs} worker(s)", views.len());

    let predicted = match &model {
        LoadedModel::Lstm(m) => {
            check_lstm_fits(m, cache.n_frames(), cache.n_coeffs())?;
            predict_classes(m, &views, jobs)?
        }
        LoadedModel::Svm(m) => {
            check_svm_fits(m, cache.n_coeffs())?;
            svm_predict(m, &pooled_matrix(&views)?)?
        }
    };

    let cm = ConfusionMatrix::from_pairs(&actual, &predicted, model.labels())?;
    print!("{}", cm.to_text());
    if let Some(path) = &args.csv {
        write_text_atomic(path, &cm.to_csv())?;
        eprintln!("wrote confusion CSV to {}", path.display());
    }
    if let Some(path) = &args.json {
        let mut text = cm.to_json();
        text.push('\n');
        write_text_atomic(path, &text)?;
        eprintln!("wrote JSON report to {}", path.display());
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let cfg = feature_config(&args.features, &file)?;
    let duration_s = duration_value(args.features.duration, file.duration, 3.0)?;

    let model = load_model(&args.model)?;
    let clip = load_wav(&args.wav).map_err(|e| audio_error(&args.wav, e))?;
    let clip = resample(&clip, cfg.sample_rate);
    let clip = clip.fix_length(duration_s);
    let seq = mfcc(&clip, &cfg)?;

    let (winner, scores) = match &model {
        LoadedModel::Lstm(m) => {
            check_lstm_fits(m, seq.n_frames(), seq.n_coeffs())?;
            predict(m, seq.frames.view()).map_err(|e| CliError::Input(e.to_string()))?
        }
        LoadedModel::Svm(m) => {
            check_svm_fits(m, seq.n_coeffs())?;
            let pooled = pooled_matrix(&[seq.frames.view()])?;
            let mut results = svm_predict_with_votes(m, &pooled)?;
            results.pop().expect("one row in, one row out")
        }
    };

    println!("predicted: {}", model.labels()[winner]);
    for (label, score) in model.labels().iter().zip(&scores) {
        println!("{label}: {score:.6}");
    }
    Ok(())
}

fn cmd_baseline_train(args: &BaselineTrainArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, DEFAULT_SEED);
    let test_fraction = pick(args.test_fraction, file.test_fraction, 0.2);
    let cfg = SvmConfig {
        c: pick(args.svm_c, file.svm_c, 10.0),
        tol: pick(args.svm_tol, file.svm_tol, 1e-3),
        seed,
        ..SvmConfig::default()
    };

    let cache = FeatureCache::read(&args.cache)?;
    let labels = cache_labels(&cache, EmotionLabel::ALL.len())?;
    let (train_idx, test_idx) =
        stratified_split(&labels, EmotionLabel::ALL.len(), test_fraction, seed)?;
    println!("test_checksum=fnv1a64:{:016x}", fnv1a64_indices(&test_idx));

    let pool = |indices: &[usize]| -> Result<(Array2<f64>, Vec<usize>), CliError> {
        let views: Vec<ArrayView2<f64>> = indices.iter().map(|&i| cache.sample(i)).collect();
        let y = indices.iter().map(|&i| labels[i]).collect();
        Ok((pooled_matrix(&views)?, y))
    };
    let (train_x, train_y) = pool(&train_idx)?;
    let (test_x, test_y) = pool(&test_idx)?;
    eprintln!(
        "fitting SVM baseline on {} clips ({} class pairs)",
        train_x.nrows(),
        EmotionLabel::ALL.len() * (EmotionLabel::ALL.len() - 1) / 2
    );

    let model = svm_fit(&train_x, &train_y, EmotionLabel::names(), &cfg)?;
    if !model.converged {
        eprintln!("warning: some subproblems hit the sweep cap before converging");
    }
    save_svm(&args.out_model, &model)?;
    eprintln!("wrote model to {}", args.out_model.display());

    let train_pred = svm_predict(&model, &train_x)?;
    let test_pred = svm_predict(&model, &test_x)?;
    let train_acc = crate::eval::accuracy(&train_y, &train_pred)?;
    let cm = ConfusionMatrix::from_pairs(&test_y, &test_pred, &model.labels)?;
    println!("Training Accuracy: {:.2}%", 100.0 * train_acc);
    println!("Test Accuracy: {:.2}%", 100.0 * cm.accuracy());
    print!("{}", cm.to_text());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, DEFAULT_SEED);
    let n_per_class = pick(args.n_per_class, file.n_per_class, 10);
    if n_per_class == 0 {
        return Err(CliError::Config("n-per-class must be at least 1".into()));
    }
    let clip_duration = duration_value(args.clip_duration, file.clip_duration, 1.5)?;
    let sample_rate = pick(args.feature_flags.sample_rate, file.sample_rate, 22_050);
    if sample_rate == 0 {
        return Err(CliError::Config("sample-rate must be positive".into()));
    }

    let clips = generate_synthetic(n_per_class, clip_duration, sample_rate, seed);

    match (&args.out_dir, &args.features) {
        (Some(dir), None) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let mut manifest = String::from("path,label\n");
            for (i, (clip, label)) in clips.iter().enumerate() {
                let name = format!("clip_{i:05}_{}.wav", label.name());
                write_wav_pcm16(&dir.join(&name), clip)
                    .map_err(|e| audio_error(&dir.join(&name), e))?;
                manifest.push_str(&format!("{name},{label}\n"));
            }
            write_text_atomic(&dir.join("manifest.csv"), &manifest)?;
            eprintln!("wrote {} wav files to {}", clips.len(), dir.display());
            println!("N={}", clips.len());
        }
        (None, Some(path)) => {
            let cfg = feature_config(&args.feature_flags, &file)?;
            let duration_s = duration_value(args.feature_flags.duration, file.duration, 3.0)?;
            if cfg.sample_rate != sample_rate {
                return Err(CliError::Config(format!(
                    "generation rate {sample_rate} differs from extraction rate {}",
                    cfg.sample_rate
                )));
            }
            let mut features = Vec::with_capacity(clips.len());
            let mut labels = Vec::with_capacity(clips.len());
            for (clip, label) in &clips {
                let seq = mfcc(&clip.fix_length(duration_s), &cfg)?;
                features.push(seq.frames);
                labels.push(label.index() as u8);
            }
            let cache = build_cache(features, labels, &cfg)?;
            cache.write(path)?;
            eprintln!("wrote feature cache to {}", path.display());
            println!(
                "N={} t={} d={}",
                cache.n_samples(),
                cache.n_frames(),
                cache.n_coeffs()
            );
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of --out-dir or --features is required".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_file_values_beat_defaults() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None::<u32>, None, 3), 3);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, br#"{"epochs": 5, "eppochs": 6}"#).unwrap();
        let err = load_file_config(Some(&path)).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.message().contains("eppochs"), "{}", err.message());

        std::fs::write(&path, br#"{"epochs": 5, "learning_rate": 0.01}"#).unwrap();
        let cfg = load_file_config(Some(&path)).unwrap();
        assert_eq!(cfg.epochs, Some(5));
        assert_eq!(cfg.learning_rate, Some(0.01));
        assert_eq!(cfg.batch_size, None);

        assert_eq!(
            load_file_config(Some(&dir.path().join("missing.json")))
                .unwrap_err()
                .exit_code(),
            3
        );
    }

    #[test]
    fn feature_config_merges_and_validates() {
        let flags = FeatureFlags {
            n_fft: Some(1024),
            ..Default::default()
        };
        let file = FileConfig {
            sample_rate: Some(16_000),
            n_fft: Some(512),
            hop_length: Some(160),
            ..Default::default()
        };
        let cfg = feature_config(&flags, &file).unwrap();
        assert_eq!(cfg.sample_rate, 16_000);
        assert_eq!(cfg.n_fft, 1024, "flag beats file");
        assert_eq!(cfg.hop_length, 160);
        assert_eq!(cfg.fmax, 8_000.0, "fmax defaults to Nyquist");

        let bad = FeatureFlags {
            n_fft: Some(1000),
            ..Default::default()
        };
        let err = feature_config(&bad, &FileConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn checksum_is_order_and_content_sensitive() {
        // Offset basis for empty input, by definition of FNV-1a.
        assert_eq!(fnv1a64_indices(&[]), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64_indices(&[1, 2, 3]), fnv1a64_indices(&[1, 2, 3]));
        assert_ne!(fnv1a64_indices(&[1, 2, 3]), fnv1a64_indices(&[3, 2, 1]));
        assert_ne!(fnv1a64_indices(&[1, 2, 3]), fnv1a64_indices(&[1, 2]));
    }

    #[test]
    fn error_kinds_map_to_documented_exit_codes() {
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 3);
        assert_eq!(CliError::Config("x".into()).exit_code(), 4);
        assert_eq!(CliError::Mismatch("x".into()).exit_code(), 5);
        assert_eq!(
            CliError::from(TrainError::InvalidConfig("bad".into())).exit_code(),
            4
        );
        assert_eq!(
            CliError::from(CacheError::Invalid("bad".into())).exit_code(),
            2
        );
    }

    #[test]
    fn cli_parses_and_verifies() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
