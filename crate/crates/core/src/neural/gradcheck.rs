use super::dd::Dd;
use super::lstm::{backward, forward, PROB_EPS};
use super::model::ClassifierModel;
use crate::error::{Error, Result};
use crate::textprep::EncodedSequence;

/// Largest relative error between analytic gradients and central differences
/// `(L(θ+ε) − L(θ−ε)) / 2ε` over every parameter, with relative error
/// `|a − n| / max(1e-8, |a| + |n|)`.
///
/// The perturbed losses are evaluated in double-double precision from the
/// model's `f64` weights, so the difference quotient is not limited by `f64`
/// rounding of the loss.
pub fn grad_check(
    model: &ClassifierModel,
    seq: &EncodedSequence,
    label: bool,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let (_, tape) = forward(model, seq)?;
    let analytic: Vec<f64> = backward(model, &tape, label)?.tensors().concat();

    let mut reference = ReferenceNet::new(model, seq);
    let mut worst = 0.0f64;
    let mut flat = 0usize;
    for (tensor, values) in model.params().tensors().into_iter().enumerate() {
        for (k, &theta) in values.iter().enumerate() {
            reference.tensors[tensor][k] = Dd::sum(theta, epsilon);
            let plus = reference.loss(label);
            reference.tensors[tensor][k] = Dd::sum(theta, -epsilon);
            let minus = reference.loss(label);
            reference.tensors[tensor][k] = Dd::from(theta);

            let numeric = f64::from((plus - minus) / Dd::from(2.0 * epsilon));
            let a = analytic[flat];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            flat += 1;
        }
    }
    Ok(worst)
}

/// Straight-line copy of the forward pass over double-double weights, in the
/// canonical tensor order.
struct ReferenceNet {
    tensors: Vec<Vec<Dd>>,
    ids: Vec<usize>,
    embed_dim: usize,
    hidden_dim: usize,
    num_layers: usize,
}

impl ReferenceNet {
    fn new(model: &ClassifierModel, seq: &EncodedSequence) -> Self {
        Self {
            tensors: model
                .params()
                .tensors()
                .iter()
                .map(|t| t.iter().map(|&v| Dd::from(v)).collect())
                .collect(),
            ids: seq.tokens().iter().map(|&id| id as usize).collect(),
            embed_dim: model.embed_dim(),
            hidden_dim: model.hidden_dim(),
            num_layers: model.num_layers(),
        }
    }

    fn probability(&self) -> Dd {
        let (ed, hd) = (self.embed_dim, self.hidden_dim);
        let mut xs: Vec<Vec<Dd>> = self
            .ids
            .iter()
            .map(|&id| self.tensors[0][id * ed..(id + 1) * ed].to_vec())
            .collect();
        for l in 0..self.num_layers {
            let (w, u, b) = (&self.tensors[1 + 3 * l], &self.tensors[2 + 3 * l], &self.tensors[3 + 3 * l]);
            let mut h = vec![Dd::ZERO; hd];
            let mut c = vec![Dd::ZERO; hd];
            for x in xs.iter_mut() {
                let z: Vec<Dd> = (0..4 * hd)
                    .map(|r| {
                        let mut acc = b[r];
                        for (col, &xv) in x.iter().enumerate() {
                            acc = acc + w[r * x.len() + col] * xv;
                        }
                        for (col, &hv) in h.iter().enumerate() {
                            acc = acc + u[r * hd + col] * hv;
                        }
                        acc
                    })
                    .collect();
                for j in 0..hd {
                    let i = z[j].sigmoid();
                    let f = z[hd + j].sigmoid();
                    let g = z[2 * hd + j].tanh();
                    let o = z[3 * hd + j].sigmoid();
                    c[j] = f * c[j] + i * g;
                    h[j] = o * c[j].tanh();
                }
                *x = h.clone();
            }
        }
        let n = self.tensors.len();
        let mut logit = self.tensors[n - 1][0];
        if let Some(last) = xs.last() {
            for (&w, &hv) in self.tensors[n - 2].iter().zip(last) {
                logit = logit + w * hv;
            }
        }
        logit.sigmoid()
    }

    /// Same clamp as the training loss.
    fn loss(&self, label: bool) -> Dd {
        let p = self.probability();
        let q = if label { p } else { Dd::ONE - p };
        if q.hi < PROB_EPS {
            -Dd::from(PROB_EPS).ln()
        } else if q.hi > 1.0 - PROB_EPS {
            -Dd::from(1.0 - PROB_EPS).ln()
        } else {
            -q.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::init_model;
    use crate::rng::SeededRng;

    fn tiny(layers: usize, seed: u64) -> ClassifierModel {
        let mut m = init_model(7, 3, 4, layers, seed).unwrap();
        let mut rng = SeededRng::new(seed.wrapping_add(1));
        for v in m.params_mut().head_w.iter_mut() {
            *v = rng.symmetric(1.0);
        }
        m
    }

    fn seq(ids: Vec<u32>) -> EncodedSequence {
        let true_length = ids.len();
        EncodedSequence { ids, true_length }
    }

    #[test]
    fn single_and_stacked_pass() {
        for layers in [1, 2] {
            let m = tiny(layers, 10 + layers as u64);
            let err = grad_check(&m, &seq(vec![2, 4, 6, 3, 5]), true, 1e-5).unwrap();
            assert!(err < 1e-4, "layers={layers}: {err}");
        }
    }

    #[test]
    fn reference_forward_matches_model() {
        for layers in [1, 2] {
            let m = tiny(layers, 3);
            for ids in [vec![2, 4, 6, 3, 5], vec![1], vec![]] {
                let s = seq(ids);
                let p64 = forward(&m, &s).unwrap().0;
                let pdd = f64::from(ReferenceNet::new(&m, &s).probability());
                assert!((p64 - pdd).abs() < 1e-14, "{p64} vs {pdd}");
            }
        }
    }

    #[test]
    fn tiny_gradients_are_resolved() {
        // Deep-in-time entries of these models have gradients near 1e-8,
        // where an f64 difference quotient at ε = 1e-5 is off by ~1e-4 relative.
        let mut rng = SeededRng::new(4);
        for i in 0..60 {
            let layers = 1 + i % 2;
            let mut m = init_model(7, 3, 4, layers, i as u64).unwrap();
            for v in m.params_mut().head_w.iter_mut() {
                *v = rng.symmetric(1.0);
            }
            m.params_mut().head_b = rng.symmetric(1.0);
            let ids = (0..5).map(|_| 1 + rng.below(6) as u32).collect();
            let err = grad_check(&m, &seq(ids), rng.below(2) == 1, 1e-5).unwrap();
            assert!(err < 1e-6, "model {i}: {err}");
        }
    }

    #[test]
    fn zero_epsilon_rejected() {
        let m = tiny(1, 0);
        assert!(grad_check(&m, &seq(vec![2]), true, 0.0).is_err());
        assert!(grad_check(&m, &seq(vec![2]), true, -1e-5).is_err());
    }
}
