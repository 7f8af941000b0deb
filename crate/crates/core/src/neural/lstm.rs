//! Forward pass, loss and backpropagation through time.
//!
//! Per step: `z = W·x + U·h_prev + b`, split into `(i, f, g, o)`;
//! `i, f, o = σ(·)`, `g = tanh(·)`, `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)`.
//! Only the first `true_length` positions are run; the head reads the top
//! layer's final hidden state (zero for an empty sequence).

use super::model::{ClassifierModel, Gradients, LstmLayerParams};
use crate::error::{Error, Result};
use crate::textprep::EncodedSequence;

/// Probability clamp used by the loss.
pub const PROB_EPS: f64 = 1e-12;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`, 4·hidden values.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Returns `(h, c, tanh(c))`; `gates` receives the activated gate values.
fn step(
    params: &LstmLayerParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut Vec<f64>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hd = params.hidden_dim();
    gates.clear();
    gates.extend_from_slice(&params.b);
    params.w.mul_vec_add(x, gates);
    params.u.mul_vec_add(h_prev, gates);
    for (k, z) in gates.iter_mut().enumerate() {
        *z = if (2 * hd..3 * hd).contains(&k) {
            z.tanh()
        } else {
            sigmoid(*z)
        };
    }
    let (i, rest) = gates.split_at(hd);
    let (f, rest) = rest.split_at(hd);
    let (g, o) = rest.split_at(hd);
    let mut c = Vec::with_capacity(hd);
    let mut tanh_c = Vec::with_capacity(hd);
    let mut h = Vec::with_capacity(hd);
    for j in 0..hd {
        let cj = f[j] * c_prev[j] + i[j] * g[j];
        let tc = cj.tanh();
        c.push(cj);
        tanh_c.push(tc);
        h.push(o[j] * tc);
    }
    (h, c, tanh_c)
}

/// Single LSTM cell update.
pub fn lstm_step(
    params: &LstmLayerParams,
    x_t: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    let hd = params.hidden_dim();
    if x_t.len() != params.input_dim() || h_prev.len() != hd || c_prev.len() != hd {
        return Err(Error::Dimension(format!(
            "lstm_step expects x of {} and state of {hd}, got {}, {}, {}",
            params.input_dim(),
            x_t.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut gates = Vec::new();
    let (h, c, _) = step(params, x_t, h_prev, c_prev, &mut gates);
    Ok((h, c))
}

/// Activations recorded by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    version: u64,
    ids: Vec<u32>,
    /// `inputs[l][t]` is the input vector of layer `l` at step `t`.
    inputs: Vec<Vec<Vec<f64>>>,
    steps: Vec<Vec<StepCache>>,
    h_last: Vec<f64>,
    prob: f64,
}

impl Tape {
    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn check_ids(model: &ClassifierModel, seq: &EncodedSequence) -> Result<()> {
    if seq.true_length > seq.ids.len() {
        return Err(Error::Dimension(format!(
            "true_length {} exceeds sequence length {}",
            seq.true_length,
            seq.ids.len()
        )));
    }
    let vocab_size = model.vocab_size();
    match seq.tokens().iter().find(|&&id| id as usize >= vocab_size) {
        Some(&id) => Err(Error::TokenOutOfRange { id, vocab_size }),
        None => Ok(()),
    }
}

pub fn forward(model: &ClassifierModel, seq: &EncodedSequence) -> Result<(f64, Tape)> {
    check_ids(model, seq)?;
    let p = model.params();
    let hd = model.hidden_dim();
    let ids = seq.tokens().to_vec();

    let mut inputs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(p.layers.len());
    let mut steps = Vec::with_capacity(p.layers.len());
    let mut layer_input: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| p.embedding.row(id as usize).to_vec())
        .collect();

    for layer in &p.layers {
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut outputs = Vec::with_capacity(ids.len());
        let mut caches = Vec::with_capacity(ids.len());
        for x in &layer_input {
            let mut gates = Vec::with_capacity(4 * hd);
            let (h_new, c_new, tanh_c) = step(layer, x, &h, &c, &mut gates);
            caches.push(StepCache {
                h_prev: std::mem::replace(&mut h, h_new),
                c_prev: std::mem::replace(&mut c, c_new),
                gates,
                tanh_c,
            });
            outputs.push(h.clone());
        }
        inputs.push(std::mem::replace(&mut layer_input, outputs));
        steps.push(caches);
    }

    let h_last = layer_input.last().cloned().unwrap_or_else(|| vec![0.0; hd]);
    let logit = p.head_b + p.head_w.iter().zip(&h_last).map(|(w, h)| w * h).sum::<f64>();
    let prob = sigmoid(logit);
    Ok((
        prob,
        Tape {
            version: model.version(),
            ids,
            inputs,
            steps,
            h_last,
            prob,
        },
    ))
}

/// Probability only, without keeping the tape.
pub fn predict(model: &ClassifierModel, seq: &EncodedSequence) -> Result<f64> {
    forward(model, seq).map(|(p, _)| p)
}

/// Binary cross-entropy with the probability clamped to `[1e-12, 1 − 1e-12]`.
pub fn bce_loss(prob: f64, label: bool) -> f64 {
    let p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn backward(model: &ClassifierModel, tape: &Tape, label: bool) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(model.params());
    backward_into(model, tape, label, &mut grads)?;
    Ok(grads)
}

/// Adds the loss gradient for one example into `grads`.
pub fn backward_into(
    model: &ClassifierModel,
    tape: &Tape,
    label: bool,
    grads: &mut Gradients,
) -> Result<()> {
    if tape.version != model.version() {
        return Err(Error::StaleTape);
    }
    let p = model.params();
    if grads.shapes() != p.shapes() {
        return Err(Error::Dimension("gradient buffer does not match the model".into()));
    }
    let hd = model.hidden_dim();
    let dlogit = tape.prob - if label { 1.0 } else { 0.0 };

    grads.head_b += dlogit;
    for (g, h) in grads.head_w.iter_mut().zip(&tape.h_last) {
        *g += dlogit * h;
    }
    let n = tape.ids.len();
    if n == 0 {
        return Ok(());
    }

    // Gradient arriving at each step's hidden output from the layer above (or the head).
    let mut dh_ext = vec![vec![0.0; hd]; n];
    for (d, w) in dh_ext[n - 1].iter_mut().zip(&p.head_w) {
        *d = dlogit * w;
    }

    let mut dz = vec![0.0; 4 * hd];
    for l in (0..p.layers.len()).rev() {
        let layer = &p.layers[l];
        let glayer = &mut grads.layers[l];
        let input_dim = layer.input_dim();
        let mut dx = vec![vec![0.0; input_dim]; n];
        let mut dh_rec = vec![0.0; hd];
        let mut dc_rec = vec![0.0; hd];

        for t in (0..n).rev() {
            let cache = &tape.steps[l][t];
            let (i, rest) = cache.gates.split_at(hd);
            let (f, rest) = rest.split_at(hd);
            let (g, o) = rest.split_at(hd);
            for j in 0..hd {
                let dh = dh_ext[t][j] + dh_rec[j];
                let tc = cache.tanh_c[j];
                let dc = dc_rec[j] + dh * o[j] * (1.0 - tc * tc);
                dz[j] = dc * g[j] * i[j] * (1.0 - i[j]);
                dz[hd + j] = dc * cache.c_prev[j] * f[j] * (1.0 - f[j]);
                dz[2 * hd + j] = dc * i[j] * (1.0 - g[j] * g[j]);
                dz[3 * hd + j] = dh * tc * o[j] * (1.0 - o[j]);
                dc_rec[j] = dc * f[j];
            }
            let x = &tape.inputs[l][t];
            glayer.w.add_outer(&dz, x);
            glayer.u.add_outer(&dz, &cache.h_prev);
            glayer.b.iter_mut().zip(&dz).for_each(|(b, d)| *b += d);
            layer.w.mul_t_vec_add(&dz, &mut dx[t]);
            dh_rec.fill(0.0);
            layer.u.mul_t_vec_add(&dz, &mut dh_rec);
        }
        dh_ext = dx;
    }

    for (t, &id) in tape.ids.iter().enumerate() {
        let row = grads.embedding.row_mut(id as usize);
        row.iter_mut().zip(&dh_ext[t]).for_each(|(g, d)| *g += d);
    }
    Ok(())
}
