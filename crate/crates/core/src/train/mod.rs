//! Training loop: stratified splitting, minibatch BPTT with Adam, and
//! per-epoch metrics.

pub mod adam;

pub use adam::{adam_step, AdamState};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::model::batch::{
    backward_batch, forward_batch, loss_and_correct, predict_probs, DropoutMasks, ModelGradients,
};
use crate::model::{ModelError, ModelState};
use crate::rng::{dropout_stream, stream_rng, STREAM_INIT, STREAM_SHUFFLE, STREAM_SPLIT};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("class index {index} out of range for {n_classes} classes")]
    IndexOutOfRange { index: usize, n_classes: usize },
    #[error("inconsistent sample shapes: {0}")]
    InconsistentShapes(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One labeled sequence: a frames-by-features view plus its class index.
pub type Sample<'a> = (ArrayView2<'a, f64>, usize);

/// Rows per unit of training work. Batches are split at these fixed
/// boundaries and the per-unit gradients are summed in unit order, so the
/// result is identical for any `--jobs` value.
const TRAIN_UNIT_ROWS: usize = 64;
/// Rows per unit of evaluation work.
const EVAL_UNIT_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 512,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: crate::rng::DEFAULT_SEED,
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return fail(format!("{name} must be in [0, 1), got {beta}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.jobs == 0 {
            return fail("jobs must be at least 1".into());
        }
        Ok(())
    }
}

/// Loss and accuracy on the train and validation sets after one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// One-hot vector with a 1 at `index`.
pub fn one_hot(index: usize, n_classes: usize) -> Result<Vec<f64>, TrainError> {
    if index >= n_classes {
        return Err(TrainError::IndexOutOfRange { index, n_classes });
    }
    let mut v = vec![0.0; n_classes];
    v[index] = 1.0;
    Ok(v)
}

/// Splits sample indices into (train, test) keeping class proportions:
/// each class contributes `floor(count * test_fraction)` test samples,
/// chosen by a seeded shuffle of that class's indices. Both outputs are
/// sorted ascending. Every class in `0..n_classes` must appear.
pub fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), TrainError> {
    if labels.is_empty() {
        return Err(TrainError::EmptyDataset("no samples to split".into()));
    }
    if n_classes == 0 {
        return Err(TrainError::InvalidConfig(
            "n_classes must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(TrainError::InvalidConfig(format!(
            "test_fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(TrainError::IndexOutOfRange {
            index: bad,
            n_classes,
        });
    }
    let mut rng = stream_rng(seed, STREAM_SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            return Err(TrainError::EmptyClass(class));
        }
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).floor() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn check_shapes(sets: &[&[Sample]], n_classes: usize) -> Result<(usize, usize), TrainError> {
    let first = sets
        .iter()
        .flat_map(|s| s.iter())
        .next()
        .ok_or_else(|| TrainError::EmptyDataset("no samples".into()))?;
    let (t, d) = first.0.dim();
    for set in sets {
        for (x, label) in set.iter() {
            if x.dim() != (t, d) {
                return Err(TrainError::InconsistentShapes(format!(
                    "sample is {:?}, expected ({t}, {d})",
                    x.dim()
                )));
            }
            if *label >= n_classes {
                return Err(TrainError::IndexOutOfRange {
                    index: *label,
                    n_classes,
                });
            }
        }
    }
    Ok((t, d))
}

/// Runs `work` for unit indices `0..n_units` on up to `jobs` threads and
/// returns the results in unit order. Provided the per-unit work is
/// independent, the combined output does not depend on `jobs`.
pub fn run_units<T: Send>(n_units: usize, jobs: usize, work: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.min(n_units).max(1);
    if jobs == 1 {
        return (0..n_units).map(work).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..n_units).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let unit = next.fetch_add(1, Ordering::Relaxed);
                if unit >= n_units {
                    break;
                }
                let out = work(unit);
                results.lock().unwrap()[unit] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every unit completed"))
        .collect()
}

fn one_hot_rows(samples: &[Sample], n_classes: usize) -> Array2<f64> {
    let mut t = Array2::zeros((samples.len(), n_classes));
    for (r, (_, label)) in samples.iter().enumerate() {
        t[[r, *label]] = 1.0;
    }
    t
}

/// Mean cross-entropy and accuracy of the model on a sample set, dropout
/// off. Work is chunked at fixed boundaries so the result is independent
/// of `jobs`.
pub fn evaluate(model: &ModelState, set: &[Sample], jobs: usize) -> Result<(f64, f64), TrainError> {
    if set.is_empty() {
        return Err(TrainError::EmptyDataset("nothing to evaluate".into()));
    }
    let n_units = set.len().div_ceil(EVAL_UNIT_ROWS);
    let outs = run_units(n_units, jobs, |unit| {
        let lo = unit * EVAL_UNIT_ROWS;
        let hi = (lo + EVAL_UNIT_ROWS).min(set.len());
        let chunk = &set[lo..hi];
        let views: Vec<ArrayView2<f64>> = chunk.iter().map(|(x, _)| *x).collect();
        let probs = predict_probs(model, &views)?;
        let targets = one_hot_rows(chunk, model.n_classes());
        Ok::<(f64, usize), TrainError>(loss_and_correct(&probs, &targets))
    });
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for out in outs {
        let (l, c) = out?;
        loss_sum += l;
        correct += c;
    }
    Ok((
        loss_sum / set.len() as f64,
        correct as f64 / set.len() as f64,
    ))
}

/// Predicted class index for each sequence, in order.
pub fn predict_classes(
    model: &ModelState,
    seqs: &[ArrayView2<f64>],
    jobs: usize,
) -> Result<Vec<usize>, TrainError> {
    if seqs.is_empty() {
        return Ok(Vec::new());
    }
    let n_units = seqs.len().div_ceil(EVAL_UNIT_ROWS);
    let outs = run_units(n_units, jobs, |unit| {
        let lo = unit * EVAL_UNIT_ROWS;
        let hi = (lo + EVAL_UNIT_ROWS).min(seqs.len());
        let probs = predict_probs(model, &seqs[lo..hi])?;
        let mut picks = Vec::with_capacity(hi - lo);
        for row in probs.rows() {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            picks.push(best);
        }
        Ok::<Vec<usize>, TrainError>(picks)
    });
    let mut all = Vec::with_capacity(seqs.len());
    for out in outs {
        all.extend(out?);
    }
    Ok(all)
}

/// Trains the standard LSTM classifier.
///
/// Initialization, shuffling, and dropout each draw from their own stream
/// of `cfg.seed`. Every epoch reshuffles the training set, walks it in
/// batches of `cfg.batch_size` (the final short batch is kept and weighted
/// by its actual size), and takes one Adam step per batch; metrics come
/// from a full dropout-free pass over both sets after each epoch and are
/// handed to `on_epoch` as they are produced.
pub fn train(
    train_set: &[Sample],
    val_set: &[Sample],
    labels: Vec<String>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(ModelState, Vec<EpochMetrics>), TrainError> {
    cfg.validate()?;
    let n_classes = labels.len();
    if train_set.is_empty() {
        return Err(TrainError::EmptyDataset("training set is empty".into()));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptyDataset("validation set is empty".into()));
    }
    let (t, d) = check_shapes(&[train_set, val_set], n_classes)?;

    let mut init_rng = stream_rng(cfg.seed, STREAM_INIT);
    let mut model = ModelState::init(d, t, labels, &mut init_rng);
    let mut opt = AdamState::new(&mut model);
    let mut shuffle_rng = stream_rng(cfg.seed, STREAM_SHUFFLE);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for (batch_idx, batch_rows) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Sample> = batch_rows.iter().map(|&i| train_set[i]).collect();
            let scale = 1.0 / batch.len() as f64;
            let n_units = batch.len().div_ceil(TRAIN_UNIT_ROWS);
            let unit_grads = run_units(n_units, cfg.jobs, |unit| {
                let lo = unit * TRAIN_UNIT_ROWS;
                let hi = (lo + TRAIN_UNIT_ROWS).min(batch.len());
                let chunk = &batch[lo..hi];
                let views: Vec<ArrayView2<f64>> = chunk.iter().map(|(x, _)| *x).collect();
                let mut rngs: Vec<_> = (lo..hi)
                    .map(|row| stream_rng(cfg.seed, dropout_stream(epoch, batch_idx, row)))
                    .collect();
                let (_, trace) =
                    forward_batch(&model, &views, DropoutMasks::Sample { rngs: &mut rngs })?;
                let targets = one_hot_rows(chunk, n_classes);
                backward_batch(&model, &views, &trace, &targets, scale)
            });
            let mut grads: Option<ModelGradients> = None;
            for g in unit_grads {
                let g = g?;
                match &mut grads {
                    None => grads = Some(g),
                    Some(total) => total.add_assign(&g),
                }
            }
            adam_step(
                &mut model,
                &grads.expect("at least one unit"),
                &mut opt,
                cfg,
            )?;
        }

        let (train_loss, train_acc) = evaluate(&model, train_set, cfg.jobs)?;
        let (val_loss, val_acc) = evaluate(&model, val_set, cfg.jobs)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        };
        on_epoch(&metrics);
        history.push(metrics);
    }
    Ok((model, history))
}
