use ndarray::{Array1, Array2, Zip};

use super::mlp::{MlpGrads, MlpParams, MlpSpec};
use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl AdamState {
    pub fn new(spec: &MlpSpec, learning_rate: f64) -> Self {
        let shapes: Vec<(usize, usize)> = spec.widths.windows(2).map(|w| (w[0], w[1])).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_w: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            v_w: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            m_b: shapes.iter().map(|&(_, o)| Array1::zeros(o)).collect(),
            v_b: shapes.iter().map(|&(_, o)| Array1::zeros(o)).collect(),
        }
    }

    /// One bias-corrected Adam update. Non-finite gradients abort before any
    /// parameter is touched.
    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpGrads) -> Result<()> {
        if grads.layers.len() != params.layers.len() || grads.layers.len() != self.m_w.len() {
            return Err(Error::Precondition("gradient and optimizer layer counts differ".into()));
        }
        for (i, (g, m)) in grads.layers.iter().zip(&self.m_w).enumerate() {
            if g.weights.dim() != m.dim() || g.bias.len() != m.ncols() {
                return Err(Error::Precondition(format!("gradient shape mismatch in layer {i}")));
            }
            if !g.weights.iter().all(|x| x.is_finite()) {
                return Err(Error::Numerical(format!("non-finite gradient in layer {i} weights")));
            }
            if !g.bias.iter().all(|x| x.is_finite()) {
                return Err(Error::Numerical(format!("non-finite gradient in layer {i} bias")));
            }
        }

        self.step += 1;
        let update = update_rule(self.learning_rate, self.beta1, self.beta2, self.epsilon, self.step);
        for (i, layer) in params.layers.iter_mut().enumerate() {
            let g = &grads.layers[i];
            Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut self.m_w[i])
                .and(&mut self.v_w[i])
                .for_each(&update);
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut self.m_b[i])
                .and(&mut self.v_b[i])
                .for_each(&update);
        }
        Ok(())
    }
}

fn update_rule(lr: f64, b1: f64, b2: f64, eps: f64, step: u64) -> impl Fn(&mut f64, &f64, &mut f64, &mut f64) {
    let t = step.min(i32::MAX as u64) as i32;
    let lr_t = lr * (1.0 - b2.powi(t)).sqrt() / (1.0 - b1.powi(t));
    let eps_hat = eps * (1.0 - b2.powi(t)).sqrt();
    // lr·m̂/(√v̂ + ε) rewritten with the bias corrections folded into lr_t and ε
    move |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= lr_t * *m / (v.sqrt() + eps_hat);
    }
}

/// Adam over a flat parameter vector, same hyperparameters as [`AdamState`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAdam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorAdam {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Precondition("gradient and optimizer lengths differ".into()));
        }
        if !grads.iter().all(|g| g.is_finite()) {
            return Err(Error::Numerical("non-finite gradient in direct beam weights".into()));
        }
        self.step += 1;
        let update = update_rule(self.learning_rate, self.beta1, self.beta2, self.epsilon, self.step);
        for i in 0..params.len() {
            update(&mut params[i], &grads[i], &mut self.m[i], &mut self.v[i]);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &mut AdamState, params: &mut MlpParams, grads: &MlpGrads) -> Result<()> {
    state.step(params, grads)
}

impl AdamState {
    /// First and second moments flattened in the same order as [`MlpParams::flatten`].
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let mut m = Vec::new();
        let mut v = Vec::new();
        for i in 0..self.m_w.len() {
            m.extend(self.m_w[i].iter().copied());
            m.extend(self.m_b[i].iter().copied());
            v.extend(self.v_w[i].iter().copied());
            v.extend(self.v_b[i].iter().copied());
        }
        (m, v)
    }

    pub fn with_moments(mut self, spec: &MlpSpec, m: &[f64], v: &[f64]) -> Result<Self> {
        let mp = MlpParams::unflatten(spec, m)?;
        let vp = MlpParams::unflatten(spec, v)?;
        self.m_w = mp.layers.iter().map(|l| l.weights.clone()).collect();
        self.m_b = mp.layers.iter().map(|l| l.bias.clone()).collect();
        self.v_w = vp.layers.iter().map(|l| l.weights.clone()).collect();
        self.v_b = vp.layers.into_iter().map(|l| l.bias).collect();
        Ok(self)
    }
}
