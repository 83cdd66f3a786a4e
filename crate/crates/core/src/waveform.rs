//! Transmitter side: QAM constellation, bit mapping, beamforming weights,
//! the transmit block and the half-wavelength uniform linear array.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{dot_t, norm_sqr, ComplexMatrix};

/// Default number of quadrature points across `[−π/2, π/2]` (quarter-degree spacing).
pub const DEFAULT_PATTERN_GRID: usize = 721;

/// Square Gray-mapped QAM with unit average energy.
///
/// `points[label]` is the symbol carrying `label`, where the label's bits are
/// read most-significant first: the first `n/2` bits select the in-phase
/// level and the last `n/2` the quadrature level, each through a reflected
/// Gray code.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn qam(order: usize) -> Result<Self> {
        build_qam(order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit `i` (0 = most significant) of `label`.
    pub fn label_bit(&self, label: usize, i: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - i)) & 1) as u8
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        (0..self.bits_per_symbol).map(|i| self.label_bit(label, i)).collect()
    }

    pub fn label_of(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::Domain(format!(
                "{} bits supplied, {}-QAM carries {}",
                bits.len(),
                self.order,
                self.bits_per_symbol
            )));
        }
        bits.iter().try_fold(0usize, |acc, &b| match b {
            0 | 1 => Ok((acc << 1) | b as usize),
            other => Err(Error::Domain(format!("bit value {other}"))),
        })
    }
}

pub fn build_qam(order: usize) -> Result<Constellation> {
    if !matches!(order, 4 | 16 | 64) {
        return Err(Error::Config(format!("unsupported QAM order {order} (use 4, 16 or 64)")));
    }
    let bits = order.trailing_zeros() as usize;
    let half = bits / 2;
    let side = 1usize << half;
    let energy = 2.0 * (order as f64 - 1.0) / 3.0;
    let scale = energy.sqrt().recip();
    let level = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) * scale;

    let mut points = vec![Complex64::new(0.0, 0.0); order];
    for i in 0..side {
        for q in 0..side {
            let label = (gray(i) << half) | gray(q);
            points[label] = Complex64::new(level(i), level(q));
        }
    }
    Ok(Constellation {
        order,
        bits_per_symbol: bits,
        points,
    })
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Maps a bit vector to its constellation point.
pub fn modulate(bits: &[u8], c: &Constellation) -> Result<Complex64> {
    Ok(c.point(c.label_of(bits)?))
}

/// Closed angular interval in radians, inside `[−π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRegion {
    min: f64,
    max: f64,
}

impl AngleRegion {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let slack = 1e-12;
        if !(min.is_finite() && max.is_finite())
            || min < -FRAC_PI_2 - slack
            || max > FRAC_PI_2 + slack
            || min > max
        {
            return Err(Error::Config(format!(
                "invalid angle region [{min}, {max}] rad; need -pi/2 <= min <= max <= pi/2"
            )));
        }
        Ok(Self {
            min: min.max(-FRAC_PI_2),
            max: max.min(FRAC_PI_2),
        })
    }

    pub fn from_degrees(min: f64, max: f64) -> Result<Self> {
        Self::new(min.to_radians(), max.to_radians())
    }

    pub fn full() -> Self {
        Self {
            min: -FRAC_PI_2,
            max: FRAC_PI_2,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn contains(&self, angle: f64) -> bool {
        (self.min..=self.max).contains(&angle)
    }
}

/// Unit-power beamforming vector `v`, `Σ|v_k|² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights(Vec<Complex64>);

impl BeamWeights {
    /// Normalizes arbitrary non-zero weights to unit power.
    pub fn normalized(raw: Vec<Complex64>) -> Result<Self> {
        let power = norm_sqr(&raw);
        if raw.is_empty() || !(power > 0.0) || !power.is_finite() {
            return Err(Error::Degenerate("beam weights have zero or non-finite power".into()));
        }
        let s = power.sqrt().recip();
        Ok(Self(raw.into_iter().map(|z| z * s).collect()))
    }

    /// Equal-gain, zero-phase weights (broadside beam).
    pub fn uniform(k: usize) -> Self {
        let w = (k as f64).sqrt().recip();
        Self(vec![Complex64::new(w, 0.0); k])
    }

    /// Conjugate-matched beam toward `angle`, reaching the full array gain `K`.
    pub fn matched(angle: f64, k: usize) -> Self {
        let w = (k as f64).sqrt().recip();
        Self(steering_vector(angle, k).into_iter().map(|z| z.conj() * w).collect())
    }

    pub fn antennas(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn power(&self) -> f64 {
        norm_sqr(&self.0)
    }
}

/// Half-wavelength ULA response, entry `k = 1..K` equal to `exp(jπ·k·sin angle)`.
pub fn steering_vector(angle: f64, antennas: usize) -> Vec<Complex64> {
    let phase = PI * angle.sin();
    (1..=antennas)
        .map(|k| Complex64::from_polar(1.0, phase * k as f64))
        .collect()
}

/// Transmit block `Y = v·xᵀ` (`K × N_win`).
pub fn assemble_block(v: &BeamWeights, x: &[Complex64]) -> ComplexMatrix {
    let w = v.as_slice();
    ComplexMatrix::from_fn(w.len(), x.len(), |k, n| w[k] * x[n])
}

/// Beamforming gain `|a(angle)ᵀ v|²`, at most `K`.
pub fn beam_gain(v: &BeamWeights, angle: f64) -> f64 {
    dot_t(&steering_vector(angle, v.antennas()), v.as_slice()).norm_sqr()
}

/// Mean beam gain over the region, by trapezoidal quadrature.
pub fn mean_region_gain(v: &BeamWeights, region: AngleRegion, grid: usize) -> f64 {
    if region.width() == 0.0 {
        return beam_gain(v, region.min());
    }
    integrate_gain(v, region.min(), region.max(), grid) / region.width()
}

/// Fraction of the radiated power, integrated over `θ ∈ [−π/2, π/2]`, that falls
/// inside `region`. `grid` is the number of quadrature points spanning the full
/// half-space; the region is sampled at the same spacing.
pub fn region_power(v: &BeamWeights, region: AngleRegion, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::Domain(format!("quadrature grid of {grid} points")));
    }
    let total = integrate_gain(v, -FRAC_PI_2, FRAC_PI_2, grid);
    if region.width() == 0.0 {
        return Ok(0.0);
    }
    let inside = integrate_gain(v, region.min(), region.max(), grid);
    Ok((inside / total).clamp(0.0, 1.0))
}

pub(crate) fn integrate_gain(v: &BeamWeights, lo: f64, hi: f64, grid: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let spacing = PI / (grid - 1) as f64;
    let steps = ((hi - lo) / spacing).ceil().max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.5 * (beam_gain(v, lo) + beam_gain(v, hi));
    for i in 1..steps {
        acc += beam_gain(v, lo + i as f64 * h);
    }
    acc * h
}
