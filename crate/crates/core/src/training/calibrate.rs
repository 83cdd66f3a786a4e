//! Constant-false-alarm calibration of the detection offset.

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

use super::batch::{beam_vector, sensing_outputs, Batch, DrawSpec};
use super::system::{CalibrationTable, JcasSystem};

/// Upper of the two order statistics bracketing the `level` quantile.
///
/// For `N` values this is the `(⌊level·N⌋ + 1)`-th smallest, clamped to the
/// maximum. Sorts `values` in place.
pub fn upper_order_statistic(values: &mut [f64], level: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    values.sort_unstable_by(f64::total_cmp);
    let idx = ((level * values.len() as f64).floor() as usize).min(values.len() - 1);
    values[idx]
}

/// A detection is declared when `logit + T_off > 0`.
pub fn detected(logit: f64, offset: f64) -> bool {
    logit + offset > 0.0
}

/// Offset derived from target-absent logits.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetEstimate {
    pub offset: f64,
    /// False-alarm rate on the calibration sample itself.
    pub empirical_p_f: f64,
    pub warnings: Vec<String>,
}

/// `T_off = −q` with `q` the upper order statistic at `1 − p_f`.
pub fn offset_from_logits(logits: &[f64], p_f: f64) -> Result<OffsetEstimate> {
    if logits.is_empty() {
        return Err(Error::Precondition("no logits to calibrate on".into()));
    }
    if !(p_f > 0.0 && p_f < 1.0) {
        return Err(Error::Domain(format!("false-alarm target {p_f} outside (0, 1)")));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("non-finite detection logit".into()));
    }
    let mut warnings = Vec::new();
    let n = logits.len() as f64;
    if n * p_f < 10.0 {
        warnings.push(format!(
            "only {} samples for false-alarm target {p_f}: fewer than 10 expected exceedances",
            logits.len()
        ));
    }
    let mut sorted = logits.to_vec();
    let offset = -upper_order_statistic(&mut sorted, 1.0 - p_f);
    let alarms = logits.iter().filter(|&&l| detected(l, offset)).count();
    if sorted[0] == sorted[sorted.len() - 1] {
        warnings.push("constant logits: the detector never fires".into());
    }
    Ok(OffsetEstimate {
        offset,
        empirical_p_f: alarms as f64 / n,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSpec {
    pub p_f: f64,
    pub n_win: (usize, usize),
    /// Target-absent windows per window length.
    pub samples: usize,
    pub sense_snr_db: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub table: CalibrationTable,
    /// `(N_win, false-alarm rate on the calibration windows)`.
    pub empirical: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

/// Target-absent windows of a fixed length.
pub fn null_windows(system: &JcasSystem, n_win: usize, count: usize, sense_snr_db: (f64, f64), rng: &SeededRng) -> Result<Batch> {
    let spec = DrawSpec {
        sense_snr_db,
        n_win: (n_win, n_win),
        target_prior: 0.0,
        ..system.scenario.draw_spec()
    };
    Batch::draw(&system.scenario, &system.constellation, n_win * count, &spec, rng)
}

/// Sets `T_off` per window length from frozen networks.
pub fn calibrate_thresholds(system: &JcasSystem, spec: &CalibrationSpec, rng: &SeededRng) -> Result<CalibrationReport> {
    if spec.samples == 0 {
        return Err(Error::Config("calibration needs at least one sample per window length".into()));
    }
    if spec.n_win.0 == 0 || spec.n_win.0 > spec.n_win.1 {
        return Err(Error::Config(format!("invalid window range {:?}", spec.n_win)));
    }
    let v = beam_vector(system)?;
    let mut table = CalibrationTable::new();
    let mut empirical = Vec::new();
    let mut warnings = Vec::new();
    for n_win in spec.n_win.0..=spec.n_win.1 {
        let batch = null_windows(system, n_win, spec.samples, spec.sense_snr_db, &rng.split(n_win as u64))?;
        let out = sensing_outputs(system, &batch, &v)?;
        let est = offset_from_logits(&out.logits, spec.p_f)?;
        warnings.extend(est.warnings.into_iter().map(|w| format!("N_win = {n_win}: {w}")));
        table.insert(n_win, est.offset);
        empirical.push((n_win, est.empirical_p_f));
    }
    Ok(CalibrationReport {
        table,
        empirical,
        warnings,
    })
}
