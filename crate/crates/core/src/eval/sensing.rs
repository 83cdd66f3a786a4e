use crate::channel::acm;
use crate::classic::{esprit_aoa, np_detect};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::training::{detected, render_scene, sensing_outputs, Batch, DrawSpec, JcasSystem, Scenario};
use crate::waveform::{mean_region_gain, BeamWeights, Constellation, DEFAULT_PATTERN_GRID};

use super::metrics::{mean_stderr, proportion, MetricRow};

const CHUNK: usize = 2_000;

/// Root-mean-square of `errors` with a delta-method standard error.
pub fn rmse(errors: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let (mse, mse_se) = mean_stderr(&sq);
    let r = mse.sqrt();
    (r, if r > 0.0 { mse_se / (2.0 * r) } else { 0.0 })
}

#[derive(Default)]
struct Point {
    present: usize,
    absent: usize,
    nn_hits: usize,
    nn_alarms: usize,
    np_hits: usize,
    np_alarms: usize,
    /// `1[nn detects] − 1[np detects]` per target-present window.
    pd_diff: Vec<f64>,
    nn_err: Vec<f64>,
    esprit_err: Vec<f64>,
}

/// Detection and angle metrics of the trained receiver and of the NP and
/// ESPRIT baselines, all computed on the same windows.
///
/// Rows per point: `nn` {pd, pf, rmse, bias, pd_minus_np}, `np` {pd, pf},
/// `esprit` {rmse, bias}. Errors are `θ̂ − θ` in radians.
pub fn eval_sensing(
    system: &JcasSystem,
    snr_grid_db: &[f64],
    n_win_grid: &[usize],
    scenes: usize,
    rng: &SeededRng,
) -> Result<Vec<MetricRow>> {
    let table = system.calibration()?;
    for &n in n_win_grid {
        table.offset(n)?;
    }
    let beam = system.beam()?;
    sweep(&system.scenario, &beam, Some(system), snr_grid_db, n_win_grid, scenes, rng)
}

/// NP and ESPRIT rows alone under a fixed beam. With the same beam and
/// stream the windows match those of [`eval_sensing`].
pub fn eval_sensing_baselines(
    scenario: &Scenario,
    beam: &BeamWeights,
    snr_grid_db: &[f64],
    n_win_grid: &[usize],
    scenes: usize,
    rng: &SeededRng,
) -> Result<Vec<MetricRow>> {
    sweep(scenario, beam, None, snr_grid_db, n_win_grid, scenes, rng)
}

fn sweep(
    scenario: &Scenario,
    beam: &BeamWeights,
    nn: Option<&JcasSystem>,
    snr_grid_db: &[f64],
    n_win_grid: &[usize],
    scenes: usize,
    rng: &SeededRng,
) -> Result<Vec<MetricRow>> {
    if scenes == 0 {
        return Err(Error::Config("sensing evaluation needs at least one window".into()));
    }
    if snr_grid_db.is_empty() || n_win_grid.is_empty() {
        return Err(Error::Config("empty sensing SNR or window grid".into()));
    }
    let constellation = Constellation::qam(scenario.order)?;
    let v = beam.as_slice();
    let gain_db = 10.0 * mean_region_gain(beam, scenario.sense_region, DEFAULT_PATTERN_GRID).log10();
    let p_f = scenario.p_f;
    let w_s = nn.map(|s| s.w_s);
    let mut rows = Vec::new();
    for (ps, &snr) in snr_grid_db.iter().enumerate() {
        for (pw, &n_win) in n_win_grid.iter().enumerate() {
            let offset = match nn {
                Some(s) => s.calibration()?.offset(n_win)?,
                None => 0.0,
            };
            let spec = DrawSpec {
                sense_snr_db: (snr, snr),
                n_win: (n_win, n_win),
                target_prior: 0.5,
                ..scenario.draw_spec()
            };
            let mut pt = Point::default();
            let mut done = 0;
            let mut chunk = 0;
            while done < scenes {
                let n = CHUNK.min(scenes - done);
                let stream = rng.split2(ps as u64, pw as u64).split(chunk);
                let batch = Batch::draw(scenario, &constellation, n * n_win, &spec, &stream)?;
                let (out, windows) = match nn {
                    Some(s) => {
                        let mut out = sensing_outputs(s, &batch, v)?;
                        let windows = std::mem::take(&mut out.windows);
                        (Some(out), windows)
                    }
                    None => (None, batch.scenes.iter().map(|sc| render_scene(sc, &batch.symbols, v)).collect()),
                };
                for (i, scene) in batch.scenes.iter().enumerate() {
                    let nn_hit = out.as_ref().map(|o| detected(o.logits[i], offset));
                    let np = np_detect(&windows[i], scene.noise_power, p_f)?.detected;
                    if scene.present {
                        pt.present += 1;
                        pt.np_hits += np as usize;
                        if let (Some(hit), Some(o)) = (nn_hit, &out) {
                            pt.nn_hits += hit as usize;
                            pt.pd_diff.push(hit as u8 as f64 - np as u8 as f64);
                            pt.nn_err.push(o.angles[i] - scene.angle);
                        }
                        let est = esprit_aoa(&acm(&windows[i])?)?;
                        pt.esprit_err.push(est.angle - scene.angle);
                    } else {
                        pt.absent += 1;
                        pt.np_alarms += np as usize;
                        pt.nn_alarms += nn_hit.unwrap_or(false) as usize;
                    }
                }
                done += n;
                chunk += 1;
            }
            let mut add = |name: &str, metric: &str, (value, se): (f64, f64), n: usize| {
                if n > 0 {
                    rows.push(
                        MetricRow::new(name, metric, value, n as u64, se)
                            .at_snr(snr, snr + gain_db)
                            .at_window(n_win)
                            .at_weight(w_s),
                    );
                }
            };
            if nn.is_some() {
                add("nn", "pd", proportion(pt.nn_hits, pt.present), pt.present);
                add("nn", "pf", proportion(pt.nn_alarms, pt.absent), pt.absent);
                add("nn", "rmse", rmse(&pt.nn_err), pt.present);
                add("nn", "bias", mean_stderr(&pt.nn_err), pt.present);
                add("nn", "pd_minus_np", mean_stderr(&pt.pd_diff), pt.present);
            }
            add("np", "pd", proportion(pt.np_hits, pt.present), pt.present);
            add("np", "pf", proportion(pt.np_alarms, pt.absent), pt.absent);
            add("esprit", "rmse", rmse(&pt.esprit_err), pt.present);
            add("esprit", "bias", mean_stderr(&pt.esprit_err), pt.present);
        }
    }
    Ok(rows)
}
