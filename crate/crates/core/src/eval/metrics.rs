use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measured point. Coordinates that do not apply are left empty.
///
/// CSV columns, in order: `system, snr_db, snr_corr_db, n_win, w_s, metric,
/// value, n, stderr`. `snr_db` is the raw SNR; `snr_corr_db` adds the mean
/// beamforming gain over the relevant region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub system: String,
    pub snr_db: Option<f64>,
    pub snr_corr_db: Option<f64>,
    pub n_win: Option<usize>,
    pub w_s: Option<f64>,
    pub metric: String,
    pub value: f64,
    /// Monte-Carlo sample count behind `value`.
    pub n: u64,
    pub stderr: f64,
}

impl MetricRow {
    pub fn new(system: &str, metric: &str, value: f64, n: u64, stderr: f64) -> Self {
        Self {
            system: system.into(),
            snr_db: None,
            snr_corr_db: None,
            n_win: None,
            w_s: None,
            metric: metric.into(),
            value,
            n,
            stderr,
        }
    }

    pub fn at_snr(mut self, raw_db: f64, corrected_db: f64) -> Self {
        self.snr_db = Some(raw_db);
        self.snr_corr_db = Some(corrected_db);
        self
    }

    pub fn at_window(mut self, n_win: usize) -> Self {
        self.n_win = Some(n_win);
        self
    }

    pub fn at_weight(mut self, w_s: Option<f64>) -> Self {
        self.w_s = w_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Precondition(format!("metric {} has zero samples", self.metric)));
        }
        if !(self.stderr >= 0.0) {
            return Err(Error::Precondition(format!("metric {} has stderr {}", self.metric, self.stderr)));
        }
        Ok(())
    }
}

/// Looks up the first row matching system, metric and the given coordinates.
pub fn find_row<'a>(
    rows: &'a [MetricRow],
    system: &str,
    metric: &str,
    snr_db: Option<f64>,
    n_win: Option<usize>,
) -> Option<&'a MetricRow> {
    rows.iter().find(|r| {
        r.system == system
            && r.metric == metric
            && (snr_db.is_none() || r.snr_db == snr_db)
            && (n_win.is_none() || r.n_win == n_win)
    })
}

pub fn write_csv<W: Write>(out: W, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        r.validate()?;
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["system", "snr_db", "snr_corr_db", "n_win", "w_s", "metric", "value", "n", "stderr"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Proportion with its binomial standard error.
pub fn proportion(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}
