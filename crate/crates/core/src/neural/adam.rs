use super::model::{ClassifierModel, Gradients, Parameters};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: AdamConfig,
    m: Parameters,
    v: Parameters,
    t: u64,
}

impl OptimizerState {
    pub fn new(model: &ClassifierModel, config: AdamConfig) -> Self {
        Self {
            config,
            m: Parameters::zeros_like(model.params()),
            v: Parameters::zeros_like(model.params()),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(
    model: &mut ClassifierModel,
    grads: &Gradients,
    state: &mut OptimizerState,
) -> Result<()> {
    let shapes = model.params().shapes();
    if grads.shapes() != shapes || state.m.shapes() != shapes {
        return Err(Error::Dimension(
            "gradients or optimizer state do not match the model".into(),
        ));
    }
    state.t += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let bias1 = 1.0 - beta1.powi(state.t as i32);
    let bias2 = 1.0 - beta2.powi(state.t as i32);

    let params = model.params_mut().tensors_mut();
    let moments = state.m.tensors_mut().into_iter().zip(state.v.tensors_mut());
    for ((theta, g), (m, v)) in params.into_iter().zip(grads.tensors()).zip(moments) {
        for k in 0..theta.len() {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
            let m_hat = m[k] / bias1;
            let v_hat = v[k] / bias2;
            theta[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::init_model;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut m = init_model(6, 2, 3, 1, 3).unwrap();
        let before = m.clone();
        let mut state = OptimizerState::new(&m, AdamConfig::default());
        let g = Gradients::zeros_like(m.params());
        adam_step(&mut m, &g, &mut state).unwrap();
        assert_eq!(m, before);
        assert_eq!(state.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut m = init_model(6, 2, 3, 1, 3).unwrap();
        let before = m.params().head_b;
        let mut state = OptimizerState::new(&m, AdamConfig::default());
        let mut g = Gradients::zeros_like(m.params());
        g.head_b = 1.0;
        adam_step(&mut m, &g, &mut state).unwrap();
        let delta = before - m.params().head_b;
        assert!((delta - 0.001).abs() < 1e-10, "{delta}");
    }

    #[test]
    fn equal_gradients_update_equally() {
        let mut m = init_model(6, 2, 3, 1, 3).unwrap();
        m.params_mut().head_w = vec![0.25, 0.25, -1.0];
        let mut state = OptimizerState::new(&m, AdamConfig::default());
        let mut g = Gradients::zeros_like(m.params());
        g.head_w = vec![0.7, 0.7, 0.0];
        for _ in 0..5 {
            adam_step(&mut m, &g, &mut state).unwrap();
        }
        let w = &m.params().head_w;
        assert_eq!(w[0], w[1]);
        assert!(w[0] < 0.25);
        assert_eq!(w[2], -1.0);
    }

    #[test]
    fn shape_mismatch() {
        let mut m = init_model(6, 2, 3, 1, 3).unwrap();
        let mut state = OptimizerState::new(&m, AdamConfig::default());
        let g = Gradients::zeros(6, 2, 3, 2);
        assert!(adam_step(&mut m, &g, &mut state).is_err());
    }
}
