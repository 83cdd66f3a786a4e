//! MMSE equalization, exact log-MAP demapping and the bit-wise mutual information.
//!
//! LLRs are `ln P(b=0|z) − ln P(b=1|z)`: positive values favour bit 0.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::waveform::Constellation;

/// Single-tap MMSE equalizer `κ*·z / (|κ|² + σ_n²)`.
pub fn mmse_equalize(z: Complex64, kappa: Complex64, noise_power: f64) -> Complex64 {
    let denom = kappa.norm_sqr() + noise_power;
    if denom == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    kappa.conj() * z / denom
}

/// Exact per-bit LLRs for an MMSE-equalized observation.
///
/// The equalizer is undone and the LLRs are evaluated on the received model
/// `z = κ·x + n`, `n ∼ CN(0, σ_n²)`. A zero channel tap carries no
/// information and yields all-zero LLRs.
pub fn exact_llr(z_eq: Complex64, kappa: Complex64, noise_power: f64, c: &Constellation) -> Result<Vec<f64>> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power {noise_power} must be positive")));
    }
    if kappa.norm_sqr() == 0.0 {
        return Ok(vec![0.0; c.bits_per_symbol()]);
    }
    let z = z_eq * (kappa.norm_sqr() + noise_power) / kappa.conj();
    exact_llr_received(z, kappa, noise_power, c)
}

/// Exact per-bit LLRs directly from the received sample `z = κ·x + n`.
pub fn exact_llr_received(z: Complex64, kappa: Complex64, noise_power: f64, c: &Constellation) -> Result<Vec<f64>> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power {noise_power} must be positive")));
    }
    let n = c.bits_per_symbol();
    let metrics: Vec<f64> = c
        .points()
        .iter()
        .map(|&x| -(z - kappa * x).norm_sqr() / noise_power)
        .collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = [f64::NEG_INFINITY; 2];
        for (label, &m) in metrics.iter().enumerate() {
            let b = c.label_bit(label, i) as usize;
            best[b] = best[b].max(m);
        }
        let mut sums = [0.0f64; 2];
        for (label, &m) in metrics.iter().enumerate() {
            let b = c.label_bit(label, i) as usize;
            sums[b] += (m - best[b]).exp();
        }
        out.push((best[0] + sums[0].ln()) - (best[1] + sums[1].ln()));
    }
    Ok(out)
}

/// Numerically stable `ln(1 + eˣ)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy (nats) of one bit against its LLR.
pub fn bce_bits(llr: f64, bit: u8) -> f64 {
    let sign = 1.0 - 2.0 * bit as f64;
    softplus(-sign * llr)
}

/// Bit-wise mutual information in bits per symbol:
/// `n − (1/N)·Σ log₂(1 + exp(−(1−2b)·L))`, clamped to `[0, n]`.
///
/// `llrs` and `bits` are symbol-major: entry `s·n + i` is bit `i` of symbol `s`.
pub fn bmi_estimate(llrs: &[f64], bits: &[u8], bits_per_symbol: usize) -> Result<f64> {
    if llrs.len() != bits.len() || bits_per_symbol == 0 || !llrs.len().is_multiple_of(bits_per_symbol) {
        return Err(Error::Precondition(format!(
            "{} LLRs vs {} bits at {bits_per_symbol} bits per symbol",
            llrs.len(),
            bits.len()
        )));
    }
    let symbols = llrs.len() / bits_per_symbol;
    if symbols == 0 {
        return Err(Error::Precondition("no symbols".into()));
    }
    let total: f64 = llrs.iter().zip(bits).map(|(&l, &b)| bce_bits(l, b)).sum();
    let per_symbol = total / symbols as f64 / std::f64::consts::LN_2;
    let n = bits_per_symbol as f64;
    Ok((n - per_symbol).clamp(0.0, n))
}
