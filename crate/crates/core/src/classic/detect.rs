use crate::error::{Error, Result};
use crate::numerics::{chi2_quantile, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionDecision {
    pub detected: bool,
    pub statistic: f64,
    pub threshold: f64,
}

impl DetectionDecision {
    pub fn compare(statistic: f64, threshold: f64) -> Self {
        Self {
            detected: statistic >= threshold,
            statistic,
            threshold,
        }
    }
}

/// Threshold of the power detector for a `K × N_win` window.
pub fn np_threshold(antennas: usize, n_win: usize, p_f: f64) -> Result<f64> {
    if !(p_f > 0.0 && p_f <= 1.0) {
        return Err(Error::Domain(format!("false-alarm probability {p_f} outside (0, 1]")));
    }
    let dof = u32::try_from(2 * antennas * n_win)
        .map_err(|_| Error::Domain("degrees of freedom overflow".into()))?;
    chi2_quantile(dof, 1.0 - p_f)
}

/// Neyman-Pearson power detector.
///
/// Under the null hypothesis `(2/σ_ns²)·Σ|z|²` is chi-squared with `2·K·N_win`
/// degrees of freedom, so thresholding at its `1 − p_f` quantile fixes the
/// false-alarm rate regardless of window length. A statistic equal to the
/// threshold counts as a detection.
pub fn np_detect(z: &ComplexMatrix, noise_power: f64, p_f: f64) -> Result<DetectionDecision> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power {noise_power} must be positive")));
    }
    let statistic = 2.0 / noise_power * z.norm_sqr();
    let threshold = np_threshold(z.rows(), z.cols(), p_f)?;
    Ok(DetectionDecision::compare(statistic, threshold))
}
