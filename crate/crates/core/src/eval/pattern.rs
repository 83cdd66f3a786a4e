use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use crate::error::{Error, Result};
use crate::waveform::{beam_gain, integrate_gain, AngleRegion, BeamWeights};

use super::metrics::MetricRow;

/// Beam gain on a uniform angle grid plus the share of radiated power that
/// lands in each region.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub angles: Vec<f64>,
    pub gains: Vec<f64>,
    pub sensing_fraction: f64,
    pub comm_fraction: f64,
    pub outside_fraction: f64,
}

/// Samples `|a(θ)ᵀv|²` at `grid` angles over `[−π/2, π/2]` and splits the
/// integrated power into sensing region, communication region and the rest.
///
/// The three parts are integrated piecewise at the grid spacing and normalized
/// by their own sum, so the fractions form an exact partition. Overlapping
/// regions are rejected.
pub fn eval_beampattern(v: &BeamWeights, comm: AngleRegion, sense: AngleRegion, grid: usize) -> Result<BeamPattern> {
    if grid < 2 {
        return Err(Error::Domain(format!("pattern grid of {grid} points")));
    }
    let (first, second) = if sense.min() <= comm.min() { (sense, comm) } else { (comm, sense) };
    if first.max() > second.min() {
        return Err(Error::Config("sensing and communication regions overlap".into()));
    }
    let piece = |lo: f64, hi: f64| integrate_gain(v, lo, hi, grid);
    let s = piece(sense.min(), sense.max());
    let c = piece(comm.min(), comm.max());
    let o = piece(-FRAC_PI_2, first.min()) + piece(first.max(), second.min()) + piece(second.max(), FRAC_PI_2);
    let total = s + c + o;
    if !(total > 0.0) {
        return Err(Error::Degenerate("beam radiates no power".into()));
    }
    let step = std::f64::consts::PI / (grid - 1) as f64;
    let angles: Vec<f64> = (0..grid).map(|i| -FRAC_PI_2 + i as f64 * step).collect();
    let gains = angles.iter().map(|&a| beam_gain(v, a)).collect();
    Ok(BeamPattern {
        angles,
        gains,
        sensing_fraction: s / total,
        comm_fraction: c / total,
        outside_fraction: o / total,
    })
}

impl BeamPattern {
    /// Fractions as metric rows. They are deterministic, so the standard error is 0.
    pub fn rows(&self, system: &str, w_s: Option<f64>) -> Vec<MetricRow> {
        let n = self.angles.len() as u64;
        [
            ("sensing_fraction", self.sensing_fraction),
            ("comm_fraction", self.comm_fraction),
            ("outside_fraction", self.outside_fraction),
        ]
        .into_iter()
        .map(|(m, v)| MetricRow::new(system, m, v, n, 0.0).at_weight(w_s))
        .collect()
    }
}

/// Writes `system,w_s,angle_deg,gain` rows for a set of patterns.
pub fn write_patterns<W: Write>(out: W, patterns: &[(String, Option<f64>, BeamPattern)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["system", "w_s", "angle_deg", "gain"])?;
    for (name, w_s, p) in patterns {
        let ws = w_s.map(|x| x.to_string()).unwrap_or_default();
        for (a, g) in p.angles.iter().zip(&p.gains) {
            w.write_record([name.clone(), ws.clone(), a.to_degrees().to_string(), g.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regions() -> (AngleRegion, AngleRegion) {
        (
            AngleRegion::from_degrees(30.0, 50.0).unwrap(),
            AngleRegion::from_degrees(-20.0, 20.0).unwrap(),
        )
    }

    #[test]
    fn broadside_main_lobe() {
        let (c, s) = regions();
        let p = eval_beampattern(&BeamWeights::uniform(16), c, s, 721).unwrap();
        let peak = p.gains.iter().cloned().fold(f64::MIN, f64::max);
        let at = p.angles[p.gains.iter().position(|&g| g == peak).unwrap()];
        assert!(at.abs() < 1e-12);
        assert!((peak - 16.0).abs() < 1e-9);
    }

    #[test]
    fn fractions_partition() {
        let (c, s) = regions();
        for v in [BeamWeights::uniform(16), BeamWeights::matched(0.7, 16), BeamWeights::matched(-1.2, 8)] {
            let p = eval_beampattern(&v, c, s, 721).unwrap();
            let sum = p.sensing_fraction + p.comm_fraction + p.outside_fraction;
            assert!((sum - 1.0).abs() < 1e-6);
        }
        assert!(eval_beampattern(&BeamWeights::uniform(4), s, s, 721).is_err());
    }
}
