//! Batched forward and backward passes for training.
//!
//! All sequences in a batch must share their frame count, so every timestep
//! is one matrix product across the whole batch. The four gate weight
//! matrices are stacked into a single `4H x (H+D)` operand per step, which
//! keeps the work inside large matrix multiplications.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, Activation, ModelError, ModelState};

/// How dropout masks are produced during a traced forward pass.
pub enum DropoutMasks<'a> {
    /// Sample a fresh mask per row from that row's generator (training).
    Sample { rngs: &'a mut [ChaCha8Rng] },
    /// Use the given per-layer masks (`None` for layers without dropout).
    Fixed(&'a [Option<Array2<f64>>]),
    /// No dropout (used for gradient checks with dropout disabled).
    Off,
}

/// Everything the backward pass needs from a forward pass.
pub struct BatchTrace {
    f: Vec<Array2<f64>>,
    i: Vec<Array2<f64>>,
    g: Vec<Array2<f64>>,
    o: Vec<Array2<f64>>,
    /// Cell states; `c[0]` is the zero initial state, `c[t+1]` follows step t.
    c: Vec<Array2<f64>>,
    tanh_c: Vec<Array2<f64>>,
    /// Input to each dense layer.
    dense_in: Vec<Array2<f64>>,
    /// Post-activation, pre-dropout output of each dense layer.
    dense_act: Vec<Array2<f64>>,
    /// Dropout masks actually applied (scaled by 1/(1-rate)).
    masks: Vec<Option<Array2<f64>>>,
    pub probs: Array2<f64>,
}

/// Gradients for every parameter, in shapes mirroring [`ModelState`].
#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub w_f: Array2<f64>,
    pub w_i: Array2<f64>,
    pub w_c: Array2<f64>,
    pub w_o: Array2<f64>,
    pub b_f: Array1<f64>,
    pub b_i: Array1<f64>,
    pub b_c: Array1<f64>,
    pub b_o: Array1<f64>,
    pub head: Vec<(Array2<f64>, Array1<f64>)>,
}

impl ModelGradients {
    pub fn zeros_like(m: &ModelState) -> Self {
        let (h, cols) = (m.lstm.hidden_size(), m.lstm.w_f.ncols());
        ModelGradients {
            w_f: Array2::zeros((h, cols)),
            w_i: Array2::zeros((h, cols)),
            w_c: Array2::zeros((h, cols)),
            w_o: Array2::zeros((h, cols)),
            b_f: Array1::zeros(h),
            b_i: Array1::zeros(h),
            b_c: Array1::zeros(h),
            b_o: Array1::zeros(h),
            head: m
                .head
                .iter()
                .map(|l| (Array2::zeros(l.w.dim()), Array1::zeros(l.b.len())))
                .collect(),
        }
    }

    /// Buffers in the canonical order of [`ModelState::param_buffers_mut`].
    pub fn buffers(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![
            self.w_f.as_slice().expect("standard layout"),
            self.w_i.as_slice().expect("standard layout"),
            self.w_c.as_slice().expect("standard layout"),
            self.w_o.as_slice().expect("standard layout"),
            self.b_f.as_slice().expect("standard layout"),
            self.b_i.as_slice().expect("standard layout"),
            self.b_c.as_slice().expect("standard layout"),
            self.b_o.as_slice().expect("standard layout"),
        ];
        for (w, b) in &self.head {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    /// Accumulates another gradient elementwise (used to combine the
    /// contributions of batch chunks in a fixed order).
    pub fn add_assign(&mut self, other: &ModelGradients) {
        self.w_f += &other.w_f;
        self.w_i += &other.w_i;
        self.w_c += &other.w_c;
        self.w_o += &other.w_o;
        self.b_f += &other.b_f;
        self.b_i += &other.b_i;
        self.b_c += &other.b_c;
        self.b_o += &other.b_o;
        for (mine, theirs) in self.head.iter_mut().zip(&other.head) {
            mine.0 += &theirs.0;
            mine.1 += &theirs.1;
        }
    }
}

fn check_batch(m: &ModelState, xs: &[ArrayView2<f64>]) -> Result<(usize, usize), ModelError> {
    if xs.is_empty() {
        return Err(ModelError::DimensionMismatch("empty batch".into()));
    }
    let (t, d) = xs[0].dim();
    for (b, x) in xs.iter().enumerate() {
        if x.dim() != (t, d) {
            return Err(ModelError::DimensionMismatch(format!(
                "sequence {b} is {:?}, expected ({t}, {d})",
                x.dim()
            )));
        }
    }
    if d != m.input_size() {
        return Err(ModelError::DimensionMismatch(format!(
            "sequences have {d} features per frame, model expects {}",
            m.input_size()
        )));
    }
    Ok((t, d))
}

/// Stacks the four gate weights into `4H x (H+D)` (f, i, c, o blocks) and
/// the biases into one length-4H vector.
fn stacked_weights(m: &ModelState) -> (Array2<f64>, Array1<f64>) {
    let h = m.lstm.hidden_size();
    let cols = m.lstm.w_f.ncols();
    let mut w = Array2::zeros((4 * h, cols));
    let mut b = Array1::zeros(4 * h);
    for (k, (wg, bg)) in [
        (&m.lstm.w_f, &m.lstm.b_f),
        (&m.lstm.w_i, &m.lstm.b_i),
        (&m.lstm.w_c, &m.lstm.b_c),
        (&m.lstm.w_o, &m.lstm.b_o),
    ]
    .into_iter()
    .enumerate()
    {
        w.slice_mut(s![k * h..(k + 1) * h, ..]).assign(wg);
        b.slice_mut(s![k * h..(k + 1) * h]).assign(bg);
    }
    (w, b)
}

/// Copies frame `t` of every sequence into the trailing columns of `z`.
fn fill_frame(z: &mut Array2<f64>, xs: &[ArrayView2<f64>], t: usize, offset: usize) {
    for (b, x) in xs.iter().enumerate() {
        let row = x.row(t);
        let mut dst = z.slice_mut(s![b, offset..]);
        dst.assign(&row);
    }
}

fn softmax_rows(a: &mut Array2<f64>) {
    for mut row in a.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.mapv_inplace(|v| v / sum);
    }
}

/// Traced forward pass over a batch: returns class probabilities (one row
/// per sample) and the trace consumed by [`backward_batch`].
pub fn forward_batch(
    m: &ModelState,
    xs: &[ArrayView2<f64>],
    masks: DropoutMasks,
) -> Result<(Array2<f64>, BatchTrace), ModelError> {
    m.validate()?;
    let (t_len, _) = check_batch(m, xs)?;
    let batch = xs.len();
    let h_size = m.lstm.hidden_size();
    if let DropoutMasks::Sample { rngs } = &masks {
        if rngs.len() != batch {
            return Err(ModelError::DimensionMismatch(format!(
                "{} dropout generators for {batch} rows",
                rngs.len()
            )));
        }
    }

    let (w_all, b_all) = stacked_weights(m);
    let mut trace = BatchTrace {
        f: Vec::with_capacity(t_len),
        i: Vec::with_capacity(t_len),
        g: Vec::with_capacity(t_len),
        o: Vec::with_capacity(t_len),
        c: vec![Array2::zeros((batch, h_size))],
        tanh_c: Vec::with_capacity(t_len),
        dense_in: Vec::new(),
        dense_act: Vec::new(),
        masks: Vec::new(),
        probs: Array2::zeros((0, 0)),
    };

    let mut h = Array2::zeros((batch, h_size));
    let mut z = Array2::zeros((batch, w_all.ncols()));
    for t in 0..t_len {
        z.slice_mut(s![.., 0..h_size]).assign(&h);
        fill_frame(&mut z, xs, t, h_size);
        let mut pre = z.dot(&w_all.t());
        pre += &b_all;

        let mut f = pre.slice(s![.., 0..h_size]).to_owned();
        f.mapv_inplace(sigmoid);
        let mut i = pre.slice(s![.., h_size..2 * h_size]).to_owned();
        i.mapv_inplace(sigmoid);
        let mut g = pre.slice(s![.., 2 * h_size..3 * h_size]).to_owned();
        g.mapv_inplace(f64::tanh);
        let mut o = pre.slice(s![.., 3 * h_size..]).to_owned();
        o.mapv_inplace(sigmoid);

        let c_prev = trace.c.last().expect("seeded with c0");
        let c = &f * c_prev + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        h = &o * &tanh_c;

        trace.f.push(f);
        trace.i.push(i);
        trace.g.push(g);
        trace.o.push(o);
        trace.c.push(c);
        trace.tanh_c.push(tanh_c);
    }

    // Dense head.
    let mut masks = masks;
    let mut a = h;
    for (l, layer) in m.head.iter().enumerate() {
        trace.dense_in.push(a.clone());
        let mut act = a.dot(&layer.w.t());
        act += &layer.b;
        match layer.activation {
            Activation::Relu => act.mapv_inplace(|v| v.max(0.0)),
            Activation::Softmax => softmax_rows(&mut act),
        }
        trace.dense_act.push(act.clone());

        let mask = if layer.dropout > 0.0 {
            match &mut masks {
                DropoutMasks::Sample { rngs } => {
                    let keep = 1.0 / (1.0 - layer.dropout);
                    let mut mask = Array2::zeros(act.dim());
                    for (b, mut row) in mask.rows_mut().into_iter().enumerate() {
                        for v in row.iter_mut() {
                            *v = if rngs[b].random::<f64>() < layer.dropout {
                                0.0
                            } else {
                                keep
                            };
                        }
                    }
                    Some(mask)
                }
                DropoutMasks::Fixed(all) => all[l].clone(),
                DropoutMasks::Off => None,
            }
        } else {
            None
        };
        if let Some(mask) = &mask {
            act *= mask;
        }
        trace.masks.push(mask);
        a = act;
    }
    trace.probs = a.clone();
    Ok((a, trace))
}

/// Untraced eval-mode forward pass (dropout off): probabilities only, with
/// no per-step allocations kept.
pub fn predict_probs(m: &ModelState, xs: &[ArrayView2<f64>]) -> Result<Array2<f64>, ModelError> {
    m.validate()?;
    let (t_len, _) = check_batch(m, xs)?;
    let batch = xs.len();
    let h_size = m.lstm.hidden_size();
    let (w_all, b_all) = stacked_weights(m);

    let mut h = Array2::zeros((batch, h_size));
    let mut c = Array2::zeros((batch, h_size));
    let mut z = Array2::zeros((batch, w_all.ncols()));
    for t in 0..t_len {
        z.slice_mut(s![.., 0..h_size]).assign(&h);
        fill_frame(&mut z, xs, t, h_size);
        let mut pre = z.dot(&w_all.t());
        pre += &b_all;
        for b in 0..batch {
            for j in 0..h_size {
                let f = sigmoid(pre[[b, j]]);
                let i = sigmoid(pre[[b, h_size + j]]);
                let g = pre[[b, 2 * h_size + j]].tanh();
                let o = sigmoid(pre[[b, 3 * h_size + j]]);
                let cv: f64 = f * c[[b, j]] + i * g;
                c[[b, j]] = cv;
                h[[b, j]] = o * cv.tanh();
            }
        }
    }
    let mut a = h;
    for layer in &m.head {
        let mut act = a.dot(&layer.w.t());
        act += &layer.b;
        match layer.activation {
            Activation::Relu => act.mapv_inplace(|v| v.max(0.0)),
            Activation::Softmax => softmax_rows(&mut act),
        }
        a = act;
    }
    Ok(a)
}

/// Backpropagation through time over a traced batch.
///
/// `targets` holds one-hot rows; `scale` multiplies the raw softmax
/// cross-entropy gradient `probs - targets`, so passing `1/N` yields the
/// gradient of the mean loss over N samples even when the batch is a chunk
/// of a larger one.
pub fn backward_batch(
    m: &ModelState,
    xs: &[ArrayView2<f64>],
    trace: &BatchTrace,
    targets: &Array2<f64>,
    scale: f64,
) -> Result<ModelGradients, ModelError> {
    let (t_len, _) = check_batch(m, xs)?;
    let batch = xs.len();
    let h_size = m.lstm.hidden_size();
    if targets.dim() != trace.probs.dim() {
        return Err(ModelError::DimensionMismatch(format!(
            "targets are {:?}, probabilities are {:?}",
            targets.dim(),
            trace.probs.dim()
        )));
    }

    let mut grads = ModelGradients::zeros_like(m);

    // Dense head, last layer first. For the softmax output with
    // cross-entropy loss the pre-activation gradient is probs - targets.
    let mut d = (&trace.probs - targets) * scale;
    for (l, layer) in m.head.iter().enumerate().rev() {
        if layer.activation == Activation::Relu {
            if let Some(mask) = &trace.masks[l] {
                d *= mask;
            }
            let act = &trace.dense_act[l];
            ndarray::Zip::from(&mut d).and(act).for_each(|dv, &av| {
                if av <= 0.0 {
                    *dv = 0.0;
                }
            });
        }
        grads.head[l].0 += &d.t().dot(&trace.dense_in[l]);
        grads.head[l].1 += &d.sum_axis(Axis(0));
        d = d.dot(&layer.w);
    }

    // Backpropagation through time.
    let (w_all, _) = stacked_weights(m);
    let mut dw_all = Array2::zeros(w_all.dim());
    let mut db_all = Array1::zeros(4 * h_size);
    let mut dh = d;
    let mut dc = Array2::zeros((batch, h_size));
    let mut z = Array2::zeros((batch, w_all.ncols()));
    let mut d_pre = Array2::zeros((batch, 4 * h_size));
    for t in (0..t_len).rev() {
        let (f, i, g, o) = (&trace.f[t], &trace.i[t], &trace.g[t], &trace.o[t]);
        let tanh_c = &trace.tanh_c[t];
        let c_prev = &trace.c[t];

        let d_o = &dh * tanh_c;
        dc += &(&dh * o * &tanh_c.mapv(|v| 1.0 - v * v));
        let d_f = &dc * c_prev;
        let d_i = &dc * g;
        let d_g = &dc * i;

        d_pre
            .slice_mut(s![.., 0..h_size])
            .assign(&(&d_f * f * &f.mapv(|v| 1.0 - v)));
        d_pre
            .slice_mut(s![.., h_size..2 * h_size])
            .assign(&(&d_i * i * &i.mapv(|v| 1.0 - v)));
        d_pre
            .slice_mut(s![.., 2 * h_size..3 * h_size])
            .assign(&(&d_g * &g.mapv(|v| 1.0 - v * v)));
        d_pre
            .slice_mut(s![.., 3 * h_size..])
            .assign(&(&d_o * o * &o.mapv(|v| 1.0 - v)));

        // Rebuild this step's input [h_prev, x_t].
        if t == 0 {
            z.slice_mut(s![.., 0..h_size]).fill(0.0);
        } else {
            let h_prev = &trace.o[t - 1] * &trace.tanh_c[t - 1];
            z.slice_mut(s![.., 0..h_size]).assign(&h_prev);
        }
        fill_frame(&mut z, xs, t, h_size);

        dw_all += &d_pre.t().dot(&z);
        db_all += &d_pre.sum_axis(Axis(0));

        let dz = d_pre.dot(&w_all);
        dh = dz.slice(s![.., 0..h_size]).to_owned();
        dc *= f;
    }

    grads.w_f.assign(&dw_all.slice(s![0..h_size, ..]));
    grads.w_i.assign(&dw_all.slice(s![h_size..2 * h_size, ..]));
    grads
        .w_c
        .assign(&dw_all.slice(s![2 * h_size..3 * h_size, ..]));
    grads.w_o.assign(&dw_all.slice(s![3 * h_size.., ..]));
    grads.b_f.assign(&db_all.slice(s![0..h_size]));
    grads.b_i.assign(&db_all.slice(s![h_size..2 * h_size]));
    grads.b_c.assign(&db_all.slice(s![2 * h_size..3 * h_size]));
    grads.b_o.assign(&db_all.slice(s![3 * h_size..]));
    Ok(grads)
}

/// Sum of per-row cross-entropies and count of correct argmax predictions.
pub fn loss_and_correct(probs: &Array2<f64>, targets: &Array2<f64>) -> (f64, usize) {
    let mut loss = 0.0;
    let mut correct = 0;
    for (p, t) in probs.rows().into_iter().zip(targets.rows()) {
        let hot = t.iter().position(|&v| v == 1.0).expect("one-hot target");
        loss += -(p[hot].max(1e-12)).ln();
        let mut best = 0;
        for k in 1..p.len() {
            if p[k] > p[best] {
                best = k;
            }
        }
        if best == hot {
            correct += 1;
        }
    }
    (loss, correct)
}
