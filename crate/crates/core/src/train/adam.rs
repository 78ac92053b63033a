//! Adam optimizer with bias-corrected moment estimates.

use super::{TrainConfig, TrainError};
use crate::model::batch::ModelGradients;
use crate::model::ModelState;

/// First and second moment accumulators, one pair per parameter buffer in
/// the canonical order of [`ModelState::param_buffers_mut`].
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &mut ModelState) -> Self {
        let shapes: Vec<usize> = model.param_buffers_mut().iter().map(|b| b.len()).collect();
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update:
/// `m = b1*m + (1-b1)*g`, `v = b2*v + (1-b2)*g^2`, then
/// `theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)`.
///
/// On the first step this reduces to `theta -= lr * g / (|g| + eps)`.
pub fn adam_step(
    model: &mut ModelState,
    grads: &ModelGradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    let grad_bufs = grads.buffers();
    let mut param_bufs = model.param_buffers_mut();
    if grad_bufs.len() != param_bufs.len() || grad_bufs.len() != state.m.len() {
        return Err(TrainError::ShapeMismatch(format!(
            "{} gradient buffers, {} parameter buffers, {} moment buffers",
            grad_bufs.len(),
            param_bufs.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let m_corr = 1.0 - cfg.beta1.powi(t);
    let v_corr = 1.0 - cfg.beta2.powi(t);
    for (k, (params, grad)) in param_bufs.iter_mut().zip(&grad_bufs).enumerate() {
        if params.len() != grad.len() {
            return Err(TrainError::ShapeMismatch(format!(
                "buffer {k}: {} parameters vs {} gradients",
                params.len(),
                grad.len()
            )));
        }
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        if m.len() != grad.len() {
            return Err(TrainError::ShapeMismatch(format!(
                "buffer {k}: optimizer state has {} entries, gradients {}",
                m.len(),
                grad.len()
            )));
        }
        for j in 0..grad.len() {
            let g = grad[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[j] / m_corr;
            let v_hat = v[j] / v_corr;
            params[j] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
