//! Model persistence: versioned JSON documents for both classifier kinds.
//!
//! Weights are stored as nested row-major arrays of f64, which serde_json
//! renders with shortest-round-trip formatting, so save/load is lossless.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cache::write_atomic;
use crate::model::{Activation, DenseLayer, LstmParams, ModelState};
use crate::svm::{BinaryClassifier, Scaler, SvmModel};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u64 },
    #[error("unknown model kind {0:?}")]
    UnknownKind(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Either classifier, as loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Lstm(ModelState),
    Svm(SvmModel),
}

impl LoadedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Lstm(_) => "lstm",
            LoadedModel::Svm(_) => "svm",
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            LoadedModel::Lstm(m) => &m.labels,
            LoadedModel::Svm(m) => &m.labels,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LstmDoc {
    schema_version: u32,
    kind: String,
    labels: Vec<String>,
    n_frames: usize,
    w_f: Vec<Vec<f64>>,
    w_i: Vec<Vec<f64>>,
    w_c: Vec<Vec<f64>>,
    w_o: Vec<Vec<f64>>,
    b_f: Vec<f64>,
    b_i: Vec<f64>,
    b_c: Vec<f64>,
    b_o: Vec<f64>,
    head: Vec<DenseLayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct DenseLayerDoc {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    activation: String,
    dropout: f64,
}

#[derive(Serialize, Deserialize)]
struct SvmDoc {
    schema_version: u32,
    kind: String,
    labels: Vec<String>,
    scaler_mean: Vec<f64>,
    scaler_std: Vec<f64>,
    gamma: f64,
    c: f64,
    converged: bool,
    classifiers: Vec<BinaryDoc>,
}

#[derive(Serialize, Deserialize)]
struct BinaryDoc {
    class_pos: usize,
    class_neg: usize,
    support_x: Vec<Vec<f64>>,
    support_y: Vec<f64>,
    support_alpha: Vec<f64>,
    bias: f64,
}

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>, ModelIoError> {
    let n_rows = rows.len();
    let n_cols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(ModelIoError::Invalid(format!(
            "{what} rows have uneven lengths"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((n_rows, n_cols), flat)
        .map_err(|e| ModelIoError::Invalid(format!("{what}: {e}")))
}

/// Saves an LSTM classifier (atomically, like all writers here).
pub fn save_lstm(path: &Path, model: &ModelState) -> Result<(), ModelIoError> {
    let doc = LstmDoc {
        schema_version: SCHEMA_VERSION,
        kind: "lstm".into(),
        labels: model.labels.clone(),
        n_frames: model.n_frames,
        w_f: matrix_to_rows(&model.lstm.w_f),
        w_i: matrix_to_rows(&model.lstm.w_i),
        w_c: matrix_to_rows(&model.lstm.w_c),
        w_o: matrix_to_rows(&model.lstm.w_o),
        b_f: model.lstm.b_f.to_vec(),
        b_i: model.lstm.b_i.to_vec(),
        b_c: model.lstm.b_c.to_vec(),
        b_o: model.lstm.b_o.to_vec(),
        head: model
            .head
            .iter()
            .map(|l| DenseLayerDoc {
                w: matrix_to_rows(&l.w),
                b: l.b.to_vec(),
                activation: match l.activation {
                    Activation::Relu => "relu".into(),
                    Activation::Softmax => "softmax".into(),
                },
                dropout: l.dropout,
            })
            .collect(),
    };
    write_json(path, &doc)
}

/// Saves the SVM baseline.
pub fn save_svm(path: &Path, model: &SvmModel) -> Result<(), ModelIoError> {
    let doc = SvmDoc {
        schema_version: SCHEMA_VERSION,
        kind: "svm".into(),
        labels: model.labels.clone(),
        scaler_mean: model.scaler.mean.clone(),
        scaler_std: model.scaler.std.clone(),
        gamma: model.gamma,
        c: model.c,
        converged: model.converged,
        classifiers: model
            .classifiers
            .iter()
            .map(|c| BinaryDoc {
                class_pos: c.class_pos,
                class_neg: c.class_neg,
                support_x: matrix_to_rows(&c.support_x),
                support_y: c.support_y.clone(),
                support_alpha: c.support_alpha.clone(),
                bias: c.bias,
            })
            .collect(),
    };
    write_json(path, &doc)
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), ModelIoError> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads either model kind, validating the schema version and internal
/// consistency.
pub fn load_model(path: &Path) -> Result<LoadedModel, ModelIoError> {
    let bytes = std::fs::read(path).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ModelIoError::Invalid("missing schema_version".into()))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(ModelIoError::SchemaVersion { found: version });
    }
    let kind = value
        .get("kind")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ModelIoError::Invalid("missing kind".into()))?;
    match kind {
        "lstm" => {
            let doc: LstmDoc = serde_json::from_value(value)?;
            let model = ModelState {
                lstm: LstmParams {
                    w_f: rows_to_matrix(&doc.w_f, "w_f")?,
                    w_i: rows_to_matrix(&doc.w_i, "w_i")?,
                    w_c: rows_to_matrix(&doc.w_c, "w_c")?,
                    w_o: rows_to_matrix(&doc.w_o, "w_o")?,
                    b_f: Array1::from(doc.b_f),
                    b_i: Array1::from(doc.b_i),
                    b_c: Array1::from(doc.b_c),
                    b_o: Array1::from(doc.b_o),
                },
                head: doc
                    .head
                    .iter()
                    .map(|l| {
                        Ok(DenseLayer {
                            w: rows_to_matrix(&l.w, "head weights")?,
                            b: Array1::from(l.b.clone()),
                            activation: match l.activation.as_str() {
                                "relu" => Activation::Relu,
                                "softmax" => Activation::Softmax,
                                other => {
                                    return Err(ModelIoError::Invalid(format!(
                                        "unknown activation {other:?}"
                                    )))
                                }
                            },
                            dropout: l.dropout,
                        })
                    })
                    .collect::<Result<Vec<_>, ModelIoError>>()?,
                labels: doc.labels,
                n_frames: doc.n_frames,
            };
            model
                .validate()
                .map_err(|e| ModelIoError::Invalid(e.to_string()))?;
            Ok(LoadedModel::Lstm(model))
        }
        "svm" => {
            let doc: SvmDoc = serde_json::from_value(value)?;
            if doc.scaler_mean.len() != doc.scaler_std.len() {
                return Err(ModelIoError::Invalid(
                    "scaler mean/std lengths differ".into(),
                ));
            }
            let n_features = doc.scaler_mean.len();
            let n_classes = doc.labels.len();
            let mut classifiers = Vec::with_capacity(doc.classifiers.len());
            for c in &doc.classifiers {
                let support_x = rows_to_matrix(&c.support_x, "support vectors")?;
                if support_x.nrows() != c.support_y.len()
                    || support_x.nrows() != c.support_alpha.len()
                {
                    return Err(ModelIoError::Invalid(
                        "support vector/label/alpha counts differ".into(),
                    ));
                }
                if support_x.nrows() > 0 && support_x.ncols() != n_features {
                    return Err(ModelIoError::Invalid(format!(
                        "support vectors have {} features, scaler has {n_features}",
                        support_x.ncols()
                    )));
                }
                if c.class_pos >= n_classes || c.class_neg >= n_classes {
                    return Err(ModelIoError::Invalid(
                        "classifier class out of range".into(),
                    ));
                }
                classifiers.push(BinaryClassifier {
                    class_pos: c.class_pos,
                    class_neg: c.class_neg,
                    support_x,
                    support_y: c.support_y.clone(),
                    support_alpha: c.support_alpha.clone(),
                    bias: c.bias,
                });
            }
            Ok(LoadedModel::Svm(SvmModel {
                labels: doc.labels,
                scaler: Scaler {
                    mean: doc.scaler_mean,
                    std: doc.scaler_std,
                },
                gamma: doc.gamma,
                c: doc.c,
                classifiers,
                converged: doc.converged,
            }))
        }
        other => Err(ModelIoError::UnknownKind(other.to_string())),
    }
}
