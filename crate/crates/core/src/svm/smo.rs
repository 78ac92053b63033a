//! Sequential minimal optimization for the soft-margin kernel SVM dual.
//!
//! The simplified variant: the first index comes from a sweep over all
//! points looking for KKT violations, the second is drawn at random. A
//! cached decision-value vector keeps each update linear in the number of
//! samples.

use ndarray::Array2;
use rand::Rng;

use super::SvmError;
use crate::rng::{stream_rng, STREAM_SMO};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoConfig {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Stop after this many consecutive sweeps without an update.
    pub stale_sweeps: usize,
    /// Hard safety cap on total sweeps; hitting it clears `converged`.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig {
            c: 10.0,
            tol: 1e-3,
            stale_sweeps: 200,
            max_sweeps: 100_000,
            seed: 0,
        }
    }
}

impl SmoConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidConfig(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tol > 0.0) {
            return Err(SvmError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.stale_sweeps == 0 || self.max_sweeps == 0 {
            return Err(SvmError::InvalidConfig(
                "sweep limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Solution of one binary subproblem.
#[derive(Debug, Clone)]
pub struct SmoOutcome {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// False when the sweep cap was hit before the solution went stale;
    /// the alphas are still usable, this is a warning state.
    pub converged: bool,
    pub sweeps: usize,
}

/// Maximizes the dual
/// `W(a) = sum(a) - 1/2 * sum_ij a_i a_j y_i y_j K_ij`
/// subject to `0 <= a_i <= C` and `sum_i a_i y_i = 0`.
///
/// `kernel` is the full Gram matrix of the training points and `y` holds
/// labels that must be exactly +1 or -1 with both classes present.
pub fn smo_solve(kernel: &Array2<f64>, y: &[f64], cfg: &SmoConfig) -> Result<SmoOutcome, SvmError> {
    cfg.validate()?;
    let n = y.len();
    if n == 0 {
        return Err(SvmError::EmptyDataset("no training points".into()));
    }
    if kernel.dim() != (n, n) {
        return Err(SvmError::DimensionMismatch(format!(
            "kernel is {:?} for {n} labels",
            kernel.dim()
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::BadLabels(
            "labels must be exactly +1 or -1".into(),
        ));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(SvmError::BadLabels("need both classes present".into()));
    }

    let mut rng = stream_rng(cfg.seed, STREAM_SMO);
    let mut alphas = vec![0.0f64; n];
    let mut bias = 0.0f64;
    // Cached decision values f(x_i); all zero while alphas and bias are.
    let mut fx = vec![0.0f64; n];

    let mut sweeps = 0usize;
    let mut stale = 0usize;
    let mut converged = false;
    while sweeps < cfg.max_sweeps {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = fx[i] - y[i];
            let r_i = y[i] * e_i;
            // KKT: violated when the margin is too small and a_i can grow,
            // or too large and a_i can shrink.
            if !((r_i < -cfg.tol && alphas[i] < cfg.c) || (r_i > cfg.tol && alphas[i] > 0.0)) {
                continue;
            }
            let j = {
                let pick = rng.random_range(0..n - 1);
                if pick >= i {
                    pick + 1
                } else {
                    pick
                }
            };
            let e_j = fx[j] - y[j];
            let (a_i_old, a_j_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if y[i] != y[j] {
                (
                    (a_j_old - a_i_old).max(0.0),
                    (cfg.c + a_j_old - a_i_old).min(cfg.c),
                )
            } else {
                (
                    (a_i_old + a_j_old - cfg.c).max(0.0),
                    (a_i_old + a_j_old).min(cfg.c),
                )
            };
            if lo >= hi {
                continue;
            }
            let eta = 2.0 * kernel[[i, j]] - kernel[[i, i]] - kernel[[j, j]];
            if eta >= 0.0 {
                continue;
            }
            let mut a_j = a_j_old - y[j] * (e_i - e_j) / eta;
            a_j = a_j.clamp(lo, hi);
            if (a_j - a_j_old).abs() < 1e-5 {
                continue;
            }
            let a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j);

            let b1 = bias
                - e_i
                - y[i] * (a_i - a_i_old) * kernel[[i, i]]
                - y[j] * (a_j - a_j_old) * kernel[[i, j]];
            let b2 = bias
                - e_j
                - y[i] * (a_i - a_i_old) * kernel[[i, j]]
                - y[j] * (a_j - a_j_old) * kernel[[j, j]];
            let new_bias = if a_i > 0.0 && a_i < cfg.c {
                b1
            } else if a_j > 0.0 && a_j < cfg.c {
                b2
            } else {
                (b1 + b2) / 2.0
            };

            // Refresh the decision cache with the two alpha deltas and the
            // bias shift.
            let di = y[i] * (a_i - a_i_old);
            let dj = y[j] * (a_j - a_j_old);
            let db = new_bias - bias;
            for (k, f) in fx.iter_mut().enumerate() {
                *f += di * kernel[[i, k]] + dj * kernel[[j, k]] + db;
            }
            alphas[i] = a_i;
            alphas[j] = a_j;
            bias = new_bias;
            changed += 1;
        }
        sweeps += 1;
        if changed == 0 {
            stale += 1;
            if stale >= cfg.stale_sweeps {
                converged = true;
                break;
            }
        } else {
            stale = 0;
        }
    }
    Ok(SmoOutcome {
        alphas,
        bias,
        converged,
        sweeps,
    })
}

/// Dual objective value for a candidate alpha vector.
pub fn dual_objective(kernel: &Array2<f64>, y: &[f64], alphas: &[f64]) -> f64 {
    let n = y.len();
    let mut value: f64 = alphas.iter().sum();
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            value -= 0.5 * alphas[i] * alphas[j] * y[i] * y[j] * kernel[[i, j]];
        }
    }
    value
}
