use std::f64::consts::FRAC_PI_2;

/// Output transformation applied after the last affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Identity; decoder LLRs.
    Linear,
    /// `sigmoid(raw + T_off)`; target presence probability.
    SigmoidWithOffset,
    /// `(π/2)·tanh(raw)`; azimuth estimate.
    ScaledTanh,
    /// `2K` reals read as `K` complex weights (real parts first) and scaled to unit power.
    BeamNormalized,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Linear => "linear",
            Head::SigmoidWithOffset => "sigmoid-offset",
            Head::ScaledTanh => "scaled-tanh",
            Head::BeamNormalized => "beam-normalized",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "linear" => Head::Linear,
            "sigmoid-offset" => Head::SigmoidWithOffset,
            "scaled-tanh" => Head::ScaledTanh,
            "beam-normalized" => Head::BeamNormalized,
            _ => return None,
        })
    }

    pub fn apply(self, raw: &[f64], offset: f64) -> Vec<f64> {
        match self {
            Head::Linear => raw.to_vec(),
            Head::SigmoidWithOffset => raw.iter().map(|&r| sigmoid(r + offset)).collect(),
            Head::ScaledTanh => raw.iter().map(|&r| FRAC_PI_2 * r.tanh()).collect(),
            Head::BeamNormalized => {
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 && norm.is_finite() {
                    raw.iter().map(|x| x / norm).collect()
                } else {
                    // no direction to normalize; fall back to the broadside beam
                    let k = raw.len() / 2;
                    let w = (k as f64).sqrt().recip();
                    (0..raw.len()).map(|i| if i < k { w } else { 0.0 }).collect()
                }
            }
        }
    }

    /// Maps `∂L/∂output` to `∂L/∂raw`.
    pub fn backward(self, raw: &[f64], upstream: &[f64], offset: f64) -> Vec<f64> {
        match self {
            Head::Linear => upstream.to_vec(),
            Head::SigmoidWithOffset => raw
                .iter()
                .zip(upstream)
                .map(|(&r, &g)| {
                    let p = sigmoid(r + offset);
                    g * p * (1.0 - p)
                })
                .collect(),
            Head::ScaledTanh => raw
                .iter()
                .zip(upstream)
                .map(|(&r, &g)| {
                    let t = r.tanh();
                    g * FRAC_PI_2 * (1.0 - t * t)
                })
                .collect(),
            Head::BeamNormalized => {
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return vec![0.0; raw.len()];
                }
                // real-vector form of (g − v·Re(vᴴg))/‖w‖
                let proj: f64 = raw.iter().zip(upstream).map(|(r, g)| r * g).sum::<f64>() / norm;
                raw.iter()
                    .zip(upstream)
                    .map(|(&r, &g)| (g - r / norm * proj) / norm)
                    .collect()
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
