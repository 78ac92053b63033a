//! RBF-kernel SVM baseline: feature standardization, an automatically
//! scaled kernel width, and a one-vs-one ensemble of SMO-trained binary
//! classifiers with majority voting.

pub mod smo;

pub use smo::{smo_solve, SmoConfig, SmoOutcome};

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid SVM config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad labels: {0}")]
    BadLabels(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
}

/// Alphas below this are dropped when collecting support vectors.
const SUPPORT_EPS: f64 = 1e-12;

/// Per-feature standardization fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fits mean and population standard deviation per column. Features with
/// standard deviation below 1e-12 get a divisor of 1 so they pass through
/// centered instead of exploding.
pub fn fit_scaler(x: &Array2<f64>) -> Result<Scaler, SvmError> {
    if x.nrows() == 0 {
        return Err(SvmError::EmptyDataset(
            "cannot fit scaler on no rows".into(),
        ));
    }
    let n = x.nrows() as f64;
    let mut mean = vec![0.0; x.ncols()];
    let mut std = vec![0.0; x.ncols()];
    for (j, col) in x.columns().into_iter().enumerate() {
        let mu: f64 = col.sum() / n;
        let var: f64 = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        mean[j] = mu;
        let sd = var.sqrt();
        std[j] = if sd < 1e-12 { 1.0 } else { sd };
    }
    Ok(Scaler { mean, std })
}

impl Scaler {
    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>, SvmError> {
        if x.ncols() != self.mean.len() {
            return Err(SvmError::DimensionMismatch(format!(
                "{} columns, scaler fitted on {}",
                x.ncols(),
                self.mean.len()
            )));
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for j in 0..row.len() {
                row[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }
}

/// The `scale` heuristic for the RBF width: `1 / (n_features * variance)`
/// where the variance is taken over every entry of the matrix at once.
pub fn gamma_scale(x: &Array2<f64>) -> Result<f64, SvmError> {
    if x.is_empty() {
        return Err(SvmError::EmptyDataset(
            "cannot derive gamma from no data".into(),
        ));
    }
    let n = (x.nrows() * x.ncols()) as f64;
    let mean: f64 = x.sum() / n;
    let var: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var < 1e-12 {
        return Err(SvmError::InvalidConfig(
            "feature matrix is constant; RBF width is undefined".into(),
        ));
    }
    Ok(1.0 / (x.ncols() as f64 * var))
}

/// RBF kernel `exp(-gamma * ||a - b||^2)`.
pub fn rbf_kernel(a: ArrayView1<f64>, b: ArrayView1<f64>, gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Full Gram matrix of the rows of `x`.
pub fn kernel_matrix(x: &Array2<f64>, gamma: f64) -> Array2<f64> {
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(x.row(i), x.row(j), gamma);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// One trained binary subproblem of the one-vs-one ensemble. A positive
/// decision value votes for `class_pos` (always the lower class index).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryClassifier {
    pub class_pos: usize,
    pub class_neg: usize,
    /// Support vectors in standardized feature space.
    pub support_x: Array2<f64>,
    /// Support labels, +1 or -1.
    pub support_y: Vec<f64>,
    pub support_alpha: Vec<f64>,
    pub bias: f64,
}

impl BinaryClassifier {
    pub fn decision(&self, x: ArrayView1<f64>, gamma: f64) -> f64 {
        let mut acc = self.bias;
        for (k, row) in self.support_x.rows().into_iter().enumerate() {
            acc += self.support_alpha[k] * self.support_y[k] * rbf_kernel(row, x, gamma);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    /// RBF width; `None` derives it from the data with [`gamma_scale`].
    pub gamma: Option<f64>,
    pub tol: f64,
    pub stale_sweeps: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            stale_sweeps: 200,
            max_sweeps: 100_000,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

/// Trained one-vs-one SVM over mean-pooled feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub labels: Vec<String>,
    pub scaler: Scaler,
    pub gamma: f64,
    pub c: f64,
    /// One classifier per unordered class pair, in (0,1), (0,2), ...,
    /// (1,2), ... order.
    pub classifiers: Vec<BinaryClassifier>,
    /// False if any subproblem hit the sweep cap; predictions still work.
    pub converged: bool,
}

/// Trains the ensemble: standardizes the inputs, derives the kernel width,
/// then solves one SMO subproblem per class pair (the lower class index is
/// the +1 side). Every class in `labels` must have at least one sample.
pub fn svm_fit(
    x: &Array2<f64>,
    y: &[usize],
    labels: Vec<String>,
    cfg: &SvmConfig,
) -> Result<SvmModel, SvmError> {
    if x.nrows() == 0 {
        return Err(SvmError::EmptyDataset("no training rows".into()));
    }
    if x.nrows() != y.len() {
        return Err(SvmError::DimensionMismatch(format!(
            "{} rows vs {} labels",
            x.nrows(),
            y.len()
        )));
    }
    let n_classes = labels.len();
    if n_classes < 2 {
        return Err(SvmError::BadLabels("need at least two classes".into()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(SvmError::BadLabels(format!(
            "label index {bad} out of range for {n_classes} classes"
        )));
    }
    for class in 0..n_classes {
        if !y.contains(&class) {
            return Err(SvmError::EmptyClass(class));
        }
    }

    let scaler = fit_scaler(x)?;
    let scaled = scaler.transform(x)?;
    let gamma = match cfg.gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => {
            return Err(SvmError::InvalidConfig(format!(
                "gamma must be positive, got {g}"
            )))
        }
        None => gamma_scale(&scaled)?,
    };

    let mut classifiers = Vec::with_capacity(n_classes * (n_classes - 1) / 2);
    let mut converged = true;
    for a in 0..n_classes {
        for b in a + 1..n_classes {
            let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
            let mut sub_x = Array2::zeros((members.len(), scaled.ncols()));
            let mut sub_y = Vec::with_capacity(members.len());
            for (r, &i) in members.iter().enumerate() {
                sub_x.row_mut(r).assign(&scaled.row(i));
                sub_y.push(if y[i] == a { 1.0 } else { -1.0 });
            }
            let kernel = kernel_matrix(&sub_x, gamma);
            let smo_cfg = SmoConfig {
                c: cfg.c,
                tol: cfg.tol,
                stale_sweeps: cfg.stale_sweeps,
                max_sweeps: cfg.max_sweeps,
                // Distinct stream per pair so subproblems are independent.
                seed: cfg.seed ^ ((a as u64) << 32 | b as u64),
            };
            let out = smo_solve(&kernel, &sub_y, &smo_cfg)?;
            converged &= out.converged;

            let keep: Vec<usize> = (0..members.len())
                .filter(|&k| out.alphas[k] > SUPPORT_EPS)
                .collect();
            let mut support_x = Array2::zeros((keep.len(), scaled.ncols()));
            let mut support_y = Vec::with_capacity(keep.len());
            let mut support_alpha = Vec::with_capacity(keep.len());
            for (r, &k) in keep.iter().enumerate() {
                support_x.row_mut(r).assign(&sub_x.row(k));
                support_y.push(sub_y[k]);
                support_alpha.push(out.alphas[k]);
            }
            classifiers.push(BinaryClassifier {
                class_pos: a,
                class_neg: b,
                support_x,
                support_y,
                support_alpha,
                bias: out.bias,
            });
        }
    }
    Ok(SvmModel {
        labels,
        scaler,
        gamma,
        c: cfg.c,
        classifiers,
        converged,
    })
}

/// Votes per class for one standardized sample, plus the sum of signed
/// decision values each class accumulated (used for tie-breaking).
fn vote(model: &SvmModel, x: ArrayView1<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = model.labels.len();
    let mut votes = vec![0usize; k];
    let mut scores = vec![0.0f64; k];
    for clf in &model.classifiers {
        let d = clf.decision(x, model.gamma);
        if d >= 0.0 {
            votes[clf.class_pos] += 1;
        } else {
            votes[clf.class_neg] += 1;
        }
        scores[clf.class_pos] += d;
        scores[clf.class_neg] -= d;
    }
    (votes, scores)
}

fn pick_winner(votes: &[usize], scores: &[f64]) -> usize {
    let mut best = 0usize;
    for k in 1..votes.len() {
        let better =
            votes[k] > votes[best] || (votes[k] == votes[best] && scores[k] > scores[best]);
        if better {
            best = k;
        }
    }
    best
}

/// Predicted class per raw (unstandardized) input row. Majority vote over
/// all pairs; ties break by the larger signed decision-value sum, then the
/// lower class index.
pub fn svm_predict(model: &SvmModel, x: &Array2<f64>) -> Result<Vec<usize>, SvmError> {
    let scaled = model.scaler.transform(x)?;
    Ok(scaled
        .rows()
        .into_iter()
        .map(|row| {
            let (votes, scores) = vote(model, row);
            pick_winner(&votes, &scores)
        })
        .collect())
}

/// Like [`svm_predict`] but also returns each class's vote share (votes
/// divided by the number of pairs), a rough confidence signal.
pub fn svm_predict_with_votes(
    model: &SvmModel,
    x: &Array2<f64>,
) -> Result<Vec<(usize, Vec<f64>)>, SvmError> {
    let scaled = model.scaler.transform(x)?;
    let n_pairs = model.classifiers.len() as f64;
    Ok(scaled
        .rows()
        .into_iter()
        .map(|row| {
            let (votes, scores) = vote(model, row);
            let winner = pick_winner(&votes, &scores);
            let shares = votes.iter().map(|&v| v as f64 / n_pairs).collect();
            (winner, shares)
        })
        .collect())
}
