//! Dense feed-forward networks with ELU hidden layers and reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::heads::Head;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Layer widths (input, hidden..., output) plus the output head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub head: Head,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, head: Head) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::Precondition(format!(
                "an MLP needs input, at least one hidden and an output layer, got widths {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Precondition(format!("zero-width layer in {widths:?}")));
        }
        if head == Head::BeamNormalized && !widths[widths.len() - 1].is_multiple_of(2) {
            return Err(Error::Precondition("beam head needs an even output width".into()));
        }
        Ok(Self { widths, head })
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn hidden(&self) -> &[usize] {
        &self.widths[1..self.widths.len() - 1]
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// One affine layer; `weights` is `fan_in × fan_out` so a batch is `X·W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

/// Gradients, shaped like [`MlpParams`].
pub type MlpGrads = MlpParams;

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: &MlpSpec, rng: &mut SeededRng) -> Self {
        let layers = spec
            .widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_fn((fan_in, fan_out), |_| rng.uniform_in(-limit, limit)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(spec: &MlpSpec) -> Self {
        let layers = spec
            .widths
            .windows(2)
            .map(|w| Dense {
                weights: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Self { layers }
    }

    pub fn matches(&self, spec: &MlpSpec) -> bool {
        self.layers.len() + 1 == spec.widths.len()
            && self
                .layers
                .iter()
                .zip(spec.widths.windows(2))
                .all(|(l, w)| l.weights.dim() == (w[0], w[1]) && l.bias.len() == w[1])
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights *= s;
            l.bias *= s;
        }
    }

    /// Parameters flattened layer by layer, weights (row-major) before bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn unflatten(spec: &MlpSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.parameter_count() {
            return Err(Error::Precondition(format!(
                "{} values for a network with {} parameters",
                values.len(),
                spec.parameter_count()
            )));
        }
        let mut offset = 0;
        let mut layers = Vec::new();
        for w in spec.widths.windows(2) {
            let n = w[0] * w[1];
            let weights = Array2::from_shape_vec((w[0], w[1]), values[offset..offset + n].to_vec())
                .expect("length checked");
            offset += n;
            let bias = Array1::from(values[offset..offset + w[1]].to_vec());
            offset += w[1];
            layers.push(Dense { weights, bias });
        }
        Ok(Self { layers })
    }
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn elu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Activations recorded by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    /// Pre-head network output, `batch × output width`.
    pub raw: Array2<f64>,
}

/// A network specification bound to its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Mlp {
    pub fn new(spec: MlpSpec, rng: &mut SeededRng) -> Self {
        let params = MlpParams::init(&spec, rng);
        Self { spec, params }
    }

    pub fn from_parts(spec: MlpSpec, params: MlpParams) -> Result<Self> {
        if !params.matches(&spec) {
            return Err(Error::Precondition("parameter shapes do not match the layer widths".into()));
        }
        Ok(Self { spec, params })
    }

    /// Batched forward pass up to (not including) the head.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Tape> {
        if x.ncols() != self.spec.input_width() {
            return Err(Error::Precondition(format!(
                "input width {} for a network expecting {}",
                x.ncols(),
                self.spec.input_width()
            )));
        }
        let last = self.params.layers.len() - 1;
        let mut inputs = Vec::with_capacity(last + 1);
        let mut pre_activations = Vec::with_capacity(last);
        let mut current = x.to_owned();
        for (i, layer) in self.params.layers.iter().enumerate() {
            let mut a = current.dot(&layer.weights);
            a += &layer.bias;
            inputs.push(current);
            if i == last {
                return Ok(Tape {
                    inputs,
                    pre_activations,
                    raw: a,
                });
            }
            current = a.mapv(elu);
            pre_activations.push(a);
        }
        unreachable!("an MLP always has an output layer")
    }

    /// Reverse pass from the gradient of the loss w.r.t. the pre-head output.
    /// Returns parameter gradients and the gradient w.r.t. the batch input.
    pub fn backward_batch(&self, tape: &Tape, grad_raw: &Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let n_layers = self.params.layers.len();
        let mut grads = Vec::with_capacity(n_layers);
        let mut g = grad_raw.clone();
        for i in (0..n_layers).rev() {
            let layer = &self.params.layers[i];
            let dw = tape.inputs[i].t().dot(&g);
            let db = g.sum_axis(Axis(0));
            let mut dx = g.dot(&layer.weights.t());
            if i > 0 {
                dx.zip_mut_with(&tape.pre_activations[i - 1], |d, &a| *d *= elu_derivative(a));
            }
            grads.push(Dense {
                weights: dw,
                bias: db,
            });
            g = dx;
        }
        grads.reverse();
        (MlpParams { layers: grads }, g)
    }

    /// Single-sample forward pass including the head.
    ///
    /// `offset` is the detection threshold `T_off`, ignored by the other heads.
    pub fn forward(&self, input: &[f64], offset: f64) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input).map_err(|e| Error::Precondition(e.to_string()))?;
        let tape = self.forward_batch(x)?;
        Ok(self.spec.head.apply(tape.raw.row(0).as_slice().expect("contiguous"), offset))
    }

    /// Single-sample gradients given `∂L/∂(head output)`.
    pub fn backward(&self, input: &[f64], upstream: &[f64], offset: f64) -> Result<(MlpGrads, Vec<f64>)> {
        let x = ArrayView2::from_shape((1, input.len()), input).map_err(|e| Error::Precondition(e.to_string()))?;
        let tape = self.forward_batch(x)?;
        let raw = tape.raw.row(0).to_vec();
        if upstream.len() != raw.len() {
            return Err(Error::Precondition(format!(
                "upstream gradient of length {} for {} outputs",
                upstream.len(),
                raw.len()
            )));
        }
        let g = self.spec.head.backward(&raw, upstream, offset);
        let g = Array2::from_shape_vec((1, g.len()), g).expect("row");
        let (grads, dx) = self.backward_batch(&tape, &g);
        Ok((grads, dx.row(0).to_vec()))
    }
}
