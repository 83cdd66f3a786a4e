use crate::classic::{bce_bits, exact_llr_received};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::training::{decoder_outputs, Batch, JcasSystem};
use crate::waveform::{mean_region_gain, DEFAULT_PATTERN_GRID};

use super::metrics::{mean_stderr, proportion, MetricRow};

const CHUNK: usize = 10_000;

/// Accumulates hard-decision errors and per-symbol BMI terms.
#[derive(Default)]
struct Tally {
    errors: usize,
    bits: usize,
    bmi_terms: Vec<f64>,
}

impl Tally {
    fn add(&mut self, llrs: &[f64], bits: &[u8], bps: usize) {
        for (sym_llr, sym_bits) in llrs.chunks_exact(bps).zip(bits.chunks_exact(bps)) {
            let mut loss = 0.0;
            for (&l, &b) in sym_llr.iter().zip(sym_bits) {
                // negative LLR decides for bit 1
                if (l < 0.0) != (b == 1) {
                    self.errors += 1;
                }
                loss += bce_bits(l, b);
            }
            self.bits += bps;
            self.bmi_terms.push(bps as f64 - loss / std::f64::consts::LN_2);
        }
    }

    fn rows(&self, system: &str, bps: usize) -> [MetricRow; 2] {
        let (ber, ber_se) = proportion(self.errors, self.bits);
        let (bmi, bmi_se) = mean_stderr(&self.bmi_terms);
        let n_sym = self.bmi_terms.len() as u64;
        [
            MetricRow::new(system, "ber", ber, self.bits as u64, ber_se),
            MetricRow::new(system, "bmi", bmi.clamp(0.0, bps as f64), n_sym, bmi_se),
        ]
    }
}

/// BER and BMI of the trained decoder and of the exact log-MAP demapper on
/// identical channel realizations, one pair of rows per raw SNR point.
pub fn eval_comm(system: &JcasSystem, snr_grid_db: &[f64], symbols: usize, rng: &SeededRng) -> Result<Vec<MetricRow>> {
    if symbols == 0 {
        return Err(Error::Config("communication evaluation needs at least one symbol".into()));
    }
    if snr_grid_db.is_empty() {
        return Err(Error::Config("empty communication SNR grid".into()));
    }
    let beam = system.beam()?;
    let v = beam.as_slice();
    let gain_db = 10.0 * mean_region_gain(&beam, system.scenario.comm_region, DEFAULT_PATTERN_GRID).log10();
    let c = &system.constellation;
    let bps = c.bits_per_symbol();
    let mut rows = Vec::new();
    for (p, &snr) in snr_grid_db.iter().enumerate() {
        let spec = crate::training::DrawSpec {
            comm_snr_db: (snr, snr),
            ..system.scenario.draw_spec()
        };
        let mut nn = Tally::default();
        let mut oracle = Tally::default();
        let mut done = 0;
        let mut chunk = 0;
        while done < symbols {
            let n = CHUNK.min(symbols - done);
            let batch = Batch::draw(&system.scenario, c, n, &spec, &rng.split2(p as u64, chunk))?;
            let (llr, front) = decoder_outputs(system, &batch, v)?;
            nn.add(&llr, &batch.bits, bps);
            let mut exact = Vec::with_capacity(n * bps);
            for i in 0..n {
                exact.extend(exact_llr_received(front.received[i], front.kappa[i], batch.comm_noise_power[i], c)?);
            }
            oracle.add(&exact, &batch.bits, bps);
            done += n;
            chunk += 1;
        }
        for (name, tally) in [("nn", &nn), ("oracle", &oracle)] {
            for row in tally.rows(name, bps) {
                rows.push(row.at_snr(snr, snr + gain_db).at_weight(Some(system.w_s)));
            }
        }
    }
    Ok(rows)
}
