//! Evaluation: confusion matrix, accuracy, per-class metrics, and
//! deterministic text/CSV/JSON renderings.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("{actual} actual labels vs {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("class index {index} out of range for {n_classes} classes")]
    IndexOutOfRange { index: usize, n_classes: usize },
}

/// Counts of (actual, predicted) pairs. Rows are actual classes, columns
/// are predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

/// Precision, recall, and F1 for one class. A zero denominator yields a
/// zero metric rather than NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    labels: &'a [String],
    counts: &'a [Vec<u64>],
    accuracy: f64,
    per_class: Vec<ClassMetrics>,
}

impl ConfusionMatrix {
    pub fn from_pairs(
        actual: &[usize],
        predicted: &[usize],
        labels: &[String],
    ) -> Result<Self, EvalError> {
        if actual.len() != predicted.len() {
            return Err(EvalError::LengthMismatch {
                actual: actual.len(),
                predicted: predicted.len(),
            });
        }
        if actual.is_empty() {
            return Err(EvalError::Empty);
        }
        let k = labels.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&a, &p) in actual.iter().zip(predicted) {
            for index in [a, p] {
                if index >= k {
                    return Err(EvalError::IndexOutOfRange {
                        index,
                        n_classes: k,
                    });
                }
            }
            counts[a][p] += 1;
        }
        Ok(ConfusionMatrix {
            labels: labels.to_vec(),
            counts,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let hits: u64 = (0..self.labels.len()).map(|k| self.counts[k][k]).sum();
        hits as f64 / self.total() as f64
    }

    pub fn per_class(&self) -> Vec<ClassMetrics> {
        let k = self.labels.len();
        (0..k)
            .map(|c| {
                let tp = self.counts[c][c];
                let row: u64 = self.counts[c].iter().sum();
                let col: u64 = (0..k).map(|r| self.counts[r][c]).sum();
                let precision = if col == 0 {
                    0.0
                } else {
                    tp as f64 / col as f64
                };
                let recall = if row == 0 {
                    0.0
                } else {
                    tp as f64 / row as f64
                };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    label: self.labels[c].clone(),
                    precision,
                    recall,
                    f1,
                    support: row,
                }
            })
            .collect()
    }

    /// Human-readable table: the matrix with actual classes as rows, then
    /// per-class metrics and overall accuracy.
    pub fn to_text(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(|l| l.len())
            .chain(std::iter::once(9))
            .max()
            .unwrap()
            .max(
                self.counts
                    .iter()
                    .flatten()
                    .map(|c| c.to_string().len())
                    .max()
                    .unwrap_or(1),
            );
        let mut out = String::new();
        out.push_str(&format!("{:>w$} |", "actual\\pred", w = width + 2));
        for l in &self.labels {
            out.push_str(&format!(" {l:>width$}"));
        }
        out.push('\n');
        out.push_str(&"-".repeat(width + 4 + (width + 1) * self.labels.len()));
        out.push('\n');
        for (r, row) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:>w$} |", self.labels[r], w = width + 2));
            for c in row {
                out.push_str(&format!(" {c:>width$}"));
            }
            out.push('\n');
        }
        out.push('\n');
        out.push_str(&format!(
            "{:<w$} {:>9} {:>9} {:>9} {:>9}\n",
            "class",
            "precision",
            "recall",
            "f1",
            "support",
            w = width + 2
        ));
        for m in self.per_class() {
            out.push_str(&format!(
                "{:<w$} {:>9.4} {:>9.4} {:>9.4} {:>9}\n",
                m.label,
                m.precision,
                m.recall,
                m.f1,
                m.support,
                w = width + 2
            ));
        }
        out.push_str(&format!(
            "\naccuracy: {:.4} ({}/{})\n",
            self.accuracy(),
            (0..self.labels.len())
                .map(|k| self.counts[k][k])
                .sum::<u64>(),
            self.total()
        ));
        out
    }

    /// The matrix as long-form CSV: one `true_label,pred_label,count` row
    /// per cell, rows in actual-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_label,pred_label,count\n");
        for (r, row) in self.counts.iter().enumerate() {
            for (c, count) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{count}\n", self.labels[r], self.labels[c]));
            }
        }
        out
    }

    /// Full report as a JSON object with fixed field order:
    /// labels, counts, accuracy, per_class.
    pub fn to_json(&self) -> String {
        let report = JsonReport {
            labels: &self.labels,
            counts: &self.counts,
            accuracy: self.accuracy(),
            per_class: self.per_class(),
        };
        serde_json::to_string_pretty(&report).expect("report serializes")
    }
}

/// Fraction of pairs where prediction equals the actual label.
pub fn accuracy(actual: &[usize], predicted: &[usize]) -> Result<f64, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = actual.iter().zip(predicted).filter(|(a, p)| a == p).count();
    Ok(hits as f64 / actual.len() as f64)
}
