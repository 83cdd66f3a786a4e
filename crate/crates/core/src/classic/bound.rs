use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which power of the reflection amplitude `σ_s` appears in the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrbForm {
    /// `K·β²·σ_s³`, as the bound is usually quoted for this system.
    #[default]
    Verbatim,
    /// `K·β²·σ_s⁴`, the dimensionally consistent variant.
    Quartic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbInputs {
    pub angle: f64,
    /// σ_ns²
    pub noise_power: f64,
    /// σ_s²
    pub reflection_power: f64,
    /// beamforming gain β toward the target
    pub beam_gain: f64,
    pub antennas: usize,
    pub n_win: usize,
    pub form: CrbForm,
}

/// Cramér-Rao bound (rad²) on single-target azimuth estimation with a `K`
/// element half-wavelength array over `N_win` snapshots:
///
/// `1/(π²cos²θ) · σ_ns²/(2N_win) · (σ_ns² + Kβσ_s²)/(Kβ²σ_s³) · 6/(0.5K³ − 0.5K)`
pub fn crb(inputs: &CrbInputs) -> Result<f64> {
    let CrbInputs {
        angle,
        noise_power,
        reflection_power,
        beam_gain,
        antennas,
        n_win,
        form,
    } = *inputs;
    if !(noise_power > 0.0 && reflection_power > 0.0 && beam_gain > 0.0) {
        return Err(Error::Domain("CRB needs positive noise, reflection power and beam gain".into()));
    }
    if antennas < 2 || n_win < 1 {
        return Err(Error::Domain(format!("CRB needs K >= 2 and N_win >= 1 (K={antennas}, N_win={n_win})")));
    }
    let cos = angle.cos();
    if angle.abs() >= PI / 2.0 || cos.abs() < 1e-12 {
        return Err(Error::Domain(format!("CRB is singular at angle {angle} (cos = 0)")));
    }
    let k = antennas as f64;
    let sigma_s = reflection_power.sqrt();
    let amplitude_power = match form {
        CrbForm::Verbatim => sigma_s.powi(3),
        CrbForm::Quartic => sigma_s.powi(4),
    };
    let geometry = 1.0 / (PI * PI * cos * cos);
    let window = noise_power / (2.0 * n_win as f64);
    let snr_term = (noise_power + k * beam_gain * reflection_power) / (k * beam_gain * beam_gain * amplitude_power);
    let aperture = 6.0 / (0.5 * k * k * k - 0.5 * k);
    Ok(geometry * window * snr_term * aperture)
}
