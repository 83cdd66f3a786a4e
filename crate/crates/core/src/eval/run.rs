use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::training::{
    calibrate_thresholds, finetune, pretrain, save_system, CalibrationReport, CalibrationSpec, JcasSystem,
    LogRecord, Optimizers, TrainOptions,
};

use super::comm::eval_comm;
use super::config::ExperimentConfig;
use super::metrics::{write_csv, MetricRow};
use super::pattern::{eval_beampattern, write_patterns, BeamPattern};
use super::sensing::eval_sensing;

/// Stream indices under the experiment seed. Training uses stream 1 and
/// network initialization stream 0.
const CALIBRATION_STREAM: u64 = 2;
const COMM_STREAM: u64 = 3;
const SENSING_STREAM: u64 = 4;

pub fn comm_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed, COMM_STREAM)
}

pub fn sensing_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed, SENSING_STREAM)
}

/// Untrained system described by the configuration.
pub fn initial_system(config: &ExperimentConfig) -> Result<JcasSystem> {
    JcasSystem::new(config.scenario()?, config.system.direct_beam, config.seed)
}

/// Pre-training followed by fine-tuning at trade-off weight `w_s`.
pub fn train_system(
    config: &ExperimentConfig,
    w_s: f64,
    mut log: Option<&mut dyn Write>,
) -> Result<(JcasSystem, Optimizers, Vec<LogRecord>)> {
    let schedule = config.schedule()?;
    let mut system = initial_system(config)?;
    let mut optimizers = Optimizers::new(&system, schedule.learning_rate);
    let options = TrainOptions {
        angle_loss: config.angle_loss()?,
        ..TrainOptions::new(schedule, config.seed)
    };
    let first = log.as_mut().map(|w| &mut **w as &mut dyn Write);
    let mut records = pretrain(&mut system, &mut optimizers, w_s, &options, first)?;
    records.extend(finetune(&mut system, &mut optimizers, w_s, &options, log)?);
    Ok((system, optimizers, records))
}

/// Fits the detection offset for every window length of the scenario on
/// target-absent windows drawn over the training SNR range, and stores it.
pub fn calibrate_system(system: &mut JcasSystem, config: &ExperimentConfig) -> Result<CalibrationReport> {
    let spec = CalibrationSpec {
        p_f: system.scenario.p_f,
        n_win: system.scenario.n_win,
        samples: config.training.calibration_samples,
        sense_snr_db: system.scenario.sense_snr_db,
    };
    let report = calibrate_thresholds(system, &spec, &SeededRng::new(config.seed, CALIBRATION_STREAM))?;
    system.calibration = Some(report.table.clone());
    Ok(report)
}

/// Stamp written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub profile: String,
    pub config_hash: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            seed: config.seed,
            profile: config.profile.clone(),
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    /// Writes `run.toml` (manifest plus the resolved configuration) into `dir`.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        #[derive(Serialize)]
        struct Stamp<'a> {
            run: &'a RunManifest,
            config: &'a ExperimentConfig,
        }
        let text = toml::to_string(&Stamp { run: self, config }).expect("manifest serializes");
        write_file(&dir.join("run.toml"), text.as_bytes())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })
}

/// Region power fractions and the gain table of a system's beam.
pub fn system_pattern(system: &JcasSystem, grid: usize) -> Result<BeamPattern> {
    eval_beampattern(&system.beam()?, system.scenario.comm_region, system.scenario.sense_region, grid)
}

/// Every metric of one trained, calibrated system.
pub fn evaluate_system(system: &JcasSystem, config: &ExperimentConfig) -> Result<(Vec<MetricRow>, BeamPattern)> {
    let e = &config.eval;
    let mut rows = eval_comm(system, &e.comm_snr_db, e.comm_symbols, &comm_rng(config.seed))?;
    rows.extend(eval_sensing(system, &e.sense_snr_db, &e.n_win, e.sense_scenes, &sensing_rng(config.seed))?);
    let pattern = system_pattern(system, e.pattern_grid)?;
    rows.extend(pattern.rows("nn", Some(system.w_s)));
    Ok((rows, pattern))
}

/// Files written by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub metrics: PathBuf,
    pub patterns: PathBuf,
    pub log: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub rows: Vec<MetricRow>,
}

/// Trains, calibrates and evaluates one system per `w_s` in the grid.
///
/// Every system starts from the same initialization and sees the same data
/// streams, so differences between grid points come from `w_s` alone.
pub fn sweep(config: &ExperimentConfig, out: &Path) -> Result<SweepOutput> {
    ensure_dir(out)?;
    let log_path = out.join("train.log");
    let mut log = std::io::BufWriter::new(create_file(&log_path)?);
    let mut rows = Vec::new();
    let mut patterns = Vec::new();
    let mut checkpoints = Vec::new();
    for &w_s in &config.training.w_s {
        let (mut system, optimizers, _) = train_system(config, w_s, Some(&mut log))?;
        calibrate_system(&mut system, config)?;
        let (r, p) = evaluate_system(&system, config)?;
        rows.extend(r);
        patterns.push(("nn".to_string(), Some(w_s), p));
        let path = out.join(format!("system-ws{w_s}.ckpt"));
        save_system(&path, &system, Some(&optimizers))?;
        checkpoints.push(path);
    }
    log.flush()?;
    let metrics = out.join("metrics.csv");
    write_csv(create_file(&metrics)?, &rows)?;
    let pattern_path = out.join("beampattern.csv");
    write_patterns(create_file(&pattern_path)?, &patterns)?;
    RunManifest::new("sweep", config).write(out, config)?;
    Ok(SweepOutput {
        metrics,
        patterns: pattern_path,
        log: log_path,
        checkpoints,
        rows,
    })
}
