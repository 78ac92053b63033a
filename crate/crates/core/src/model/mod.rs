//! LSTM classifier: one recurrent layer over MFCC frames followed by a
//! small dense head with dropout and a softmax output.
//!
//! This module holds the parameter types and straightforward per-sample
//! operations; [`batch`] implements the batched forward and backward passes
//! used for training.

pub mod batch;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("target is not one-hot: {0}")]
    NotOneHot(String),
}

/// Hidden width of the recurrent layer.
pub const HIDDEN_SIZE: usize = 128;
/// Widths of the two ReLU layers between the LSTM and the output.
pub const HEAD_WIDTHS: [usize; 2] = [64, 32];
/// Dropout rate applied after each ReLU head layer during training.
pub const HEAD_DROPOUT: f64 = 0.2;

/// Weights of one LSTM layer. Each gate weight matrix has shape
/// `hidden x (hidden + input)` and acts on the concatenation
/// `[h_prev, x_t]`; biases have length `hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_f: Array2<f64>,
    pub w_i: Array2<f64>,
    pub w_c: Array2<f64>,
    pub w_o: Array2<f64>,
    pub b_f: Array1<f64>,
    pub b_i: Array1<f64>,
    pub b_c: Array1<f64>,
    pub b_o: Array1<f64>,
}

impl LstmParams {
    pub fn hidden_size(&self) -> usize {
        self.w_f.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.w_f.ncols() - self.w_f.nrows()
    }

    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = || Array2::zeros((hidden, hidden + input));
        let b = || Array1::zeros(hidden);
        LstmParams {
            w_f: w(),
            w_i: w(),
            w_c: w(),
            w_o: w(),
            b_f: b(),
            b_i: b(),
            b_c: b(),
            b_o: b(),
        }
    }

    /// Xavier-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`; biases
    /// zero except the forget gate's, which starts at 1 so early training
    /// retains cell state. Gate matrices are drawn in f, i, c, o order,
    /// each row-major.
    pub fn init(hidden: usize, input: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = LstmParams::zeros(hidden, input);
        let limit = (6.0 / (2 * hidden + input) as f64).sqrt();
        for w in [&mut p.w_f, &mut p.w_i, &mut p.w_c, &mut p.w_o] {
            for v in w.iter_mut() {
                *v = limit * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        p.b_f.fill(1.0);
        p
    }

    fn check_consistent(&self) -> Result<(), ModelError> {
        let (h, cols) = (self.hidden_size(), self.w_f.ncols());
        for (name, w) in [("w_i", &self.w_i), ("w_c", &self.w_c), ("w_o", &self.w_o)] {
            if w.dim() != (h, cols) {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name} is {:?}, expected ({h}, {cols})",
                    w.dim()
                )));
            }
        }
        for (name, b) in [
            ("b_f", &self.b_f),
            ("b_i", &self.b_i),
            ("b_c", &self.b_c),
            ("b_o", &self.b_o),
        ] {
            if b.len() != h {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name} has length {}, expected {h}",
                    b.len()
                )));
            }
        }
        Ok(())
    }
}

/// Activations and cell state produced by one LSTM step.
#[derive(Debug, Clone)]
pub struct LstmStepState {
    pub f: Array1<f64>,
    pub i: Array1<f64>,
    /// Candidate cell values (tanh pre-gate), often written c-tilde.
    pub g: Array1<f64>,
    pub o: Array1<f64>,
    pub c: Array1<f64>,
    pub h: Array1<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM timestep on a single sample:
/// `f,i,o = sigmoid(W [h_prev, x] + b)`, `g = tanh(W_c [h_prev, x] + b_c)`,
/// `c = f*c_prev + i*g`, `h = o*tanh(c)`.
pub fn lstm_step(
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    p: &LstmParams,
) -> Result<LstmStepState, ModelError> {
    p.check_consistent()?;
    let (hidden, input) = (p.hidden_size(), p.input_size());
    if x.len() != input || h_prev.len() != hidden || c_prev.len() != hidden {
        return Err(ModelError::DimensionMismatch(format!(
            "step inputs ({}, {}, {}) do not match params ({input}, {hidden}, {hidden})",
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut z = Array1::zeros(hidden + input);
    z.slice_mut(ndarray::s![0..hidden]).assign(&h_prev);
    z.slice_mut(ndarray::s![hidden..]).assign(&x);

    let f = (p.w_f.dot(&z) + &p.b_f).mapv(sigmoid);
    let i = (p.w_i.dot(&z) + &p.b_i).mapv(sigmoid);
    let g = (p.w_c.dot(&z) + &p.b_c).mapv(f64::tanh);
    let o = (p.w_o.dot(&z) + &p.b_o).mapv(sigmoid);
    let c = &f * &c_prev + &i * &g;
    let h = &o * &c.mapv(f64::tanh);
    Ok(LstmStepState { f, i, g, o, c, h })
}

/// Runs the LSTM over a whole sequence (rows are frames) from zero initial
/// state, returning the final hidden state and the per-step activations.
pub fn lstm_forward(
    seq: ArrayView2<f64>,
    p: &LstmParams,
) -> Result<(Array1<f64>, Vec<LstmStepState>), ModelError> {
    let hidden = p.hidden_size();
    let mut h = Array1::zeros(hidden);
    let mut c = Array1::zeros(hidden);
    let mut states = Vec::with_capacity(seq.nrows());
    for t in 0..seq.nrows() {
        let st = lstm_step(seq.row(t), h.view(), c.view(), p)?;
        h = st.h.clone();
        c = st.c.clone();
        states.push(st);
    }
    Ok((h, states))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
}

/// One dense layer: `w` has shape `out x in`. `dropout` is the rate applied
/// to this layer's output during training (zero for none; always zero on
/// the softmax layer).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
    pub dropout: f64,
}

impl DenseLayer {
    pub fn init(
        out: usize,
        input: usize,
        activation: Activation,
        dropout: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let limit = (6.0 / (input + out) as f64).sqrt();
        let mut w = Array2::zeros((out, input));
        for v in w.iter_mut() {
            *v = limit * (2.0 * rng.random::<f64>() - 1.0);
        }
        DenseLayer {
            w,
            b: Array1::zeros(out),
            activation,
            dropout,
        }
    }
}

/// Full classifier parameters plus the label vocabulary and, once trained,
/// the number of frames per input sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub lstm: LstmParams,
    pub head: Vec<DenseLayer>,
    pub labels: Vec<String>,
    /// Frames per sequence the model was trained on; prediction inputs are
    /// checked against this at the CLI boundary.
    pub n_frames: usize,
}

impl ModelState {
    /// Builds the standard architecture: LSTM(128) -> 64 ReLU (dropout 0.2)
    /// -> 32 ReLU (dropout 0.2) -> softmax over the labels. All weights are
    /// drawn from `rng` in a fixed order (LSTM gates, then head layers).
    pub fn init(
        input_size: usize,
        n_frames: usize,
        labels: Vec<String>,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        assert!(!labels.is_empty(), "need at least one label");
        let lstm = LstmParams::init(HIDDEN_SIZE, input_size, rng);
        let head = vec![
            DenseLayer::init(
                HEAD_WIDTHS[0],
                HIDDEN_SIZE,
                Activation::Relu,
                HEAD_DROPOUT,
                rng,
            ),
            DenseLayer::init(
                HEAD_WIDTHS[1],
                HEAD_WIDTHS[0],
                Activation::Relu,
                HEAD_DROPOUT,
                rng,
            ),
            DenseLayer::init(labels.len(), HEAD_WIDTHS[1], Activation::Softmax, 0.0, rng),
        ];
        ModelState {
            lstm,
            head,
            labels,
            n_frames,
        }
    }

    pub fn input_size(&self) -> usize {
        self.lstm.input_size()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    /// Parameter buffers in the canonical order shared with
    /// [`batch::ModelGradients::buffers`]: LSTM weights f, i, c, o; LSTM
    /// biases f, i, c, o; then each head layer's weights and bias.
    pub fn param_buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.lstm.w_f.as_slice_mut().expect("standard layout"),
            self.lstm.w_i.as_slice_mut().expect("standard layout"),
            self.lstm.w_c.as_slice_mut().expect("standard layout"),
            self.lstm.w_o.as_slice_mut().expect("standard layout"),
            self.lstm.b_f.as_slice_mut().expect("standard layout"),
            self.lstm.b_i.as_slice_mut().expect("standard layout"),
            self.lstm.b_c.as_slice_mut().expect("standard layout"),
            self.lstm.b_o.as_slice_mut().expect("standard layout"),
        ];
        for layer in &mut self.head {
            out.push(layer.w.as_slice_mut().expect("standard layout"));
            out.push(layer.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.lstm.check_consistent()?;
        let mut width = self.lstm.hidden_size();
        for (l, layer) in self.head.iter().enumerate() {
            if layer.w.ncols() != width {
                return Err(ModelError::DimensionMismatch(format!(
                    "head layer {l} expects {} inputs but previous layer emits {width}",
                    layer.w.ncols()
                )));
            }
            if layer.b.len() != layer.w.nrows() {
                return Err(ModelError::DimensionMismatch(format!(
                    "head layer {l} bias length {} does not match {} outputs",
                    layer.b.len(),
                    layer.w.nrows()
                )));
            }
            if !(0.0..1.0).contains(&layer.dropout) {
                return Err(ModelError::DimensionMismatch(format!(
                    "head layer {l} dropout {} outside [0, 1)",
                    layer.dropout
                )));
            }
            width = layer.w.nrows();
        }
        match self.head.last() {
            Some(last) if last.activation == Activation::Softmax => {}
            _ => {
                return Err(ModelError::DimensionMismatch(
                    "head must end in a softmax layer".into(),
                ))
            }
        }
        if width != self.labels.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "softmax width {width} does not match {} labels",
                self.labels.len()
            )));
        }
        Ok(())
    }
}

/// Numerically safe softmax: subtracts the max before exponentiating, so
/// the result is invariant to shifting all inputs by a constant.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Cross-entropy `-ln(max(p_true, 1e-12))` against a strictly one-hot
/// target.
pub fn cross_entropy(probs: &[f64], target: &[f64]) -> Result<f64, ModelError> {
    if probs.len() != target.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} probabilities vs {} targets",
            probs.len(),
            target.len()
        )));
    }
    let mut hot: Option<usize> = None;
    for (k, &v) in target.iter().enumerate() {
        if v == 1.0 {
            if hot.is_some() {
                return Err(ModelError::NotOneHot("more than one 1".into()));
            }
            hot = Some(k);
        } else if v != 0.0 {
            return Err(ModelError::NotOneHot(format!(
                "entry {v} is neither 0 nor 1"
            )));
        }
    }
    let hot = hot.ok_or_else(|| ModelError::NotOneHot("no 1 present".into()))?;
    Ok(-(probs[hot].max(1e-12)).ln())
}

/// Runs the dense head on one vector. Passing a generator enables training
/// mode: each ReLU layer's output is zeroed elementwise with its dropout
/// probability and survivors are scaled by `1/(1-rate)`; mask values are
/// drawn one per unit in layer order.
pub fn dense_forward(
    x: ArrayView1<f64>,
    head: &[DenseLayer],
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<Array1<f64>, ModelError> {
    let mut a = x.to_owned();
    for layer in head {
        if layer.w.ncols() != a.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "layer expects {} inputs, got {}",
                layer.w.ncols(),
                a.len()
            )));
        }
        let mut pre = layer.w.dot(&a) + &layer.b;
        match layer.activation {
            Activation::Relu => pre.mapv_inplace(|v| v.max(0.0)),
            Activation::Softmax => pre = Array1::from(softmax(pre.as_slice().unwrap())),
        }
        if layer.dropout > 0.0 {
            if let Some(rng) = dropout_rng.as_deref_mut() {
                let keep = 1.0 / (1.0 - layer.dropout);
                pre.mapv_inplace(|v| {
                    if rng.random::<f64>() < layer.dropout {
                        0.0
                    } else {
                        v * keep
                    }
                });
            }
        }
        a = pre;
    }
    Ok(a)
}

/// Classifies one sequence (dropout off): returns the winning class index
/// (lowest index on ties) and the class probabilities.
pub fn predict(m: &ModelState, seq: ArrayView2<f64>) -> Result<(usize, Vec<f64>), ModelError> {
    if seq.ncols() != m.input_size() {
        return Err(ModelError::DimensionMismatch(format!(
            "sequence has {} features per frame, model expects {}",
            seq.ncols(),
            m.input_size()
        )));
    }
    let (h, _) = lstm_forward(seq, &m.lstm)?;
    let probs = dense_forward(h.view(), &m.head, None)?;
    let mut best = 0;
    for k in 1..probs.len() {
        if probs[k] > probs[best] {
            best = k;
        }
    }
    Ok((best, probs.to_vec()))
}
