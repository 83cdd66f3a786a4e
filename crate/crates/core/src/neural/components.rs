use super::heads::Head;
use super::mlp::MlpSpec;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// The four trainable blocks of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Beamformer,
    Decoder,
    Angle,
    Detection,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 4] = [
        ComponentKind::Beamformer,
        ComponentKind::Decoder,
        ComponentKind::Angle,
        ComponentKind::Detection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::Beamformer => "beamformer",
            ComponentKind::Decoder => "decoder",
            ComponentKind::Angle => "angle",
            ComponentKind::Detection => "detection",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn head(self) -> Head {
        match self {
            ComponentKind::Beamformer => Head::BeamNormalized,
            ComponentKind::Decoder => Head::Linear,
            ComponentKind::Angle => Head::ScaledTanh,
            ComponentKind::Detection => Head::SigmoidWithOffset,
        }
    }
}

/// Layer widths of each component for `K` antennas and `M`-ary modulation.
///
/// | component  | input    | hidden                | output   |
/// |------------|----------|-----------------------|----------|
/// | beamformer | 4        | K, K, 2K              | 2K       |
/// | decoder    | 3        | 10M, 10M, 10M, 10M    | log₂ M   |
/// | angle      | 2K² + 2  | 8K, 4K, 4K, K         | 1        |
/// | detection  | 2K² + 2  | 2K, 2K, K             | 1        |
pub fn build_component(kind: ComponentKind, antennas: usize, order: usize) -> Result<MlpSpec> {
    if antennas == 0 {
        return Err(Error::Config("at least one antenna is required".into()));
    }
    if order < 2 || !order.is_power_of_two() {
        return Err(Error::Config(format!("modulation order {order} is not a power of two")));
    }
    let k = antennas;
    let sensing_in = 2 * k * k + 2;
    let widths = match kind {
        ComponentKind::Beamformer => vec![4, k, k, 2 * k, 2 * k],
        ComponentKind::Decoder => {
            let h = 10 * order;
            vec![3, h, h, h, h, order.trailing_zeros() as usize]
        }
        ComponentKind::Angle => vec![sensing_in, 8 * k, 4 * k, 4 * k, k, 1],
        ComponentKind::Detection => vec![sensing_in, 2 * k, 2 * k, k, 1],
    };
    MlpSpec::new(widths, kind.head())
}

/// Real parts of `corr` (row-major), then imaginary parts, then `n_win` and `σ_ns`.
pub fn sensing_features(corr: &ComplexMatrix, n_win: usize, noise_std: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * corr.rows() * corr.cols() + 2);
    out.extend(corr.as_slice().iter().map(|z| z.re));
    out.extend(corr.as_slice().iter().map(|z| z.im));
    out.push(n_win as f64);
    out.push(noise_std);
    out
}

/// Conditioning applied to [`sensing_features`] before they enter a network:
/// correlations are divided by the noise power, `N_win` by the largest window
/// and the noise power is given in decibels divided by ten.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaling {
    pub max_window: usize,
}

impl Default for FeatureScaling {
    fn default() -> Self {
        Self { max_window: 15 }
    }
}

impl FeatureScaling {
    /// Writes the scaled features of one window into `out` (length `2K² + 2`).
    pub fn write(&self, corr: &ComplexMatrix, n_win: usize, noise_power: f64, out: &mut [f64]) {
        let kk = corr.rows() * corr.cols();
        debug_assert_eq!(out.len(), 2 * kk + 2);
        let inv = noise_power.recip();
        for (i, z) in corr.as_slice().iter().enumerate() {
            out[i] = z.re * inv;
            out[kk + i] = z.im * inv;
        }
        out[2 * kk] = n_win as f64 / self.max_window as f64;
        out[2 * kk + 1] = noise_power.log10();
    }

    pub fn scaled(&self, corr: &ComplexMatrix, n_win: usize, noise_power: f64) -> Vec<f64> {
        let mut out = vec![0.0; 2 * corr.rows() * corr.cols() + 2];
        self.write(corr, n_win, noise_power, &mut out);
        out
    }

    /// Factor by which each correlation entry is scaled (`∂feature/∂corr`).
    pub fn correlation_gain(&self, noise_power: f64) -> f64 {
        noise_power.recip()
    }
}
