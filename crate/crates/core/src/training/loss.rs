//! Loss terms of the joint objective.

use crate::classic::{bce_bits, softplus};
use crate::error::{Error, Result};

const PROB_CLAMP: f64 = 1e-12;

/// Trade-off weight `w_s ∈ [0, 1]` between communication and sensing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffConfig {
    w_s: f64,
}

impl TradeoffConfig {
    pub fn new(w_s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_s) {
            return Err(Error::Config(format!("trade-off weight w_s = {w_s} outside [0, 1]")));
        }
        Ok(Self { w_s })
    }

    pub fn w_s(&self) -> f64 {
        self.w_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub comm: f64,
    pub detect: f64,
    pub angle: f64,
    pub total: f64,
}

/// `(1 − w_s)·comm + w_s·detect + w_s·angle`.
pub fn total_loss(comm: f64, detect: f64, angle: f64, tradeoff: TradeoffConfig) -> LossBreakdown {
    let w = tradeoff.w_s();
    LossBreakdown {
        comm,
        detect,
        angle,
        total: (1.0 - w) * comm + w * detect + w * angle,
    }
}

/// Mean binary cross-entropy (nats per bit) of LLRs against the sent bits.
pub fn loss_comm(llrs: &[f64], bits: &[u8]) -> Result<f64> {
    if llrs.len() != bits.len() || llrs.is_empty() {
        return Err(Error::Precondition(format!("{} LLRs for {} bits", llrs.len(), bits.len())));
    }
    Ok(llrs.iter().zip(bits).map(|(&l, &b)| bce_bits(l, b)).sum::<f64>() / llrs.len() as f64)
}

/// Mean binary cross-entropy of presence probabilities, clamped to `[1e-12, 1 − 1e-12]`.
pub fn loss_detect(probs: &[f64], present: &[bool]) -> Result<f64> {
    if probs.len() != present.len() || probs.is_empty() {
        return Err(Error::Precondition(format!("{} probabilities for {} labels", probs.len(), present.len())));
    }
    let sum: f64 = probs
        .iter()
        .zip(present)
        .map(|(&p, &t)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if t {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// [`loss_detect`] evaluated on pre-sigmoid logits (already offset), without clamping.
pub fn loss_detect_logits(logits: &[f64], present: &[bool]) -> Result<f64> {
    if logits.len() != present.len() || logits.is_empty() {
        return Err(Error::Precondition(format!("{} logits for {} labels", logits.len(), present.len())));
    }
    let sum: f64 = logits
        .iter()
        .zip(present)
        .map(|(&z, &t)| if t { softplus(-z) } else { softplus(z) })
        .sum();
    Ok(sum / logits.len() as f64)
}

/// Angle loss with the number of target-present scenes that contributed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleLoss {
    pub value: f64,
    pub contributing: usize,
}

impl AngleLoss {
    /// No scene in the batch had a target.
    pub fn is_empty(&self) -> bool {
        self.contributing == 0
    }
}

/// Mean squared angle error over target-present scenes.
pub fn loss_angle_legacy(truth: &[f64], estimate: &[f64], present: &[bool]) -> Result<AngleLoss> {
    weighted_angle_loss(truth, estimate, present, |_| 1.0)
}

/// Mean over target-present scenes of `(N_win/σ_ns²)·(θ − θ̂)²`.
///
/// The weight cancels the `σ_ns²/N_win` scaling of the attainable error
/// variance, so scenes of every window length and noise level contribute terms
/// of comparable magnitude.
pub fn loss_angle_normalized(
    truth: &[f64],
    estimate: &[f64],
    n_win: &[usize],
    noise_std: &[f64],
    present: &[bool],
) -> Result<AngleLoss> {
    if n_win.len() != truth.len() || noise_std.len() != truth.len() {
        return Err(Error::Precondition("per-scene window and noise vectors differ in length".into()));
    }
    if let Some(s) = noise_std.iter().zip(present).find(|(s, &t)| t && !(**s > 0.0)) {
        return Err(Error::Domain(format!("noise standard deviation {} must be positive", s.0)));
    }
    weighted_angle_loss(truth, estimate, present, |i| n_win[i] as f64 / (noise_std[i] * noise_std[i]))
}

/// Weight `N_win/σ_ns²` used by the normalized angle loss.
pub fn angle_weight(n_win: usize, noise_power: f64) -> f64 {
    n_win as f64 / noise_power
}

fn weighted_angle_loss(
    truth: &[f64],
    estimate: &[f64],
    present: &[bool],
    weight: impl Fn(usize) -> f64,
) -> Result<AngleLoss> {
    if truth.len() != estimate.len() || truth.len() != present.len() {
        return Err(Error::Precondition("angle vectors differ in length".into()));
    }
    let mut sum = 0.0;
    let mut contributing = 0;
    for i in 0..truth.len() {
        if present[i] {
            let e = truth[i] - estimate[i];
            sum += weight(i) * e * e;
            contributing += 1;
        }
    }
    Ok(AngleLoss {
        value: if contributing == 0 { 0.0 } else { sum / contributing as f64 },
        contributing,
    })
}
