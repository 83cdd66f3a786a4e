//! Command line front end.
//!
//! ```text
//! jcas <train|calibrate|eval-comm|eval-sensing|beampattern|baseline|sweep>
//!      [--config PATH] [--seed N] [--profile desk|full] [--out DIR] [--checkpoint PATH]
//! ```
//!
//! Exit status: 0 on success, 2 for usage, configuration and file errors,
//! 3 for numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{
    calibrate_system, create_file, ensure_dir, eval_comm, eval_sensing, eval_sensing_baselines, comm_rng,
    sensing_rng, sweep, system_pattern, train_system, write_csv, write_patterns, ExperimentConfig, MetricRow,
    RunManifest,
};
use crate::training::{load_system, save_system, JcasSystem};
use crate::waveform::BeamWeights;

#[derive(Parser, Debug)]
#[command(name = "jcas", version, about = "Joint communication and sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pre-train and fine-tune one system, then write its checkpoint.
    Train(Common),
    /// Fit detection offsets for every window length and update the checkpoint.
    Calibrate(Common),
    /// BER and BMI of the trained decoder and the exact demapper.
    EvalComm(Common),
    /// Detection and angle metrics of a calibrated system and its baselines.
    EvalSensing(Common),
    /// Beam gain table and region power fractions.
    Beampattern(Common),
    /// NP detector and ESPRIT under a checkpoint's beam, or a broadside beam.
    Baseline(Common),
    /// Train, calibrate and evaluate one system per trade-off weight.
    Sweep(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML experiment file; defaults apply when absent.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_parser = ["desk", "full"])]
    profile: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "jcas-out")]
    out: PathBuf,
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Trade-off weight for `train`; the first grid entry when absent.
    #[arg(long = "w-s", value_name = "W")]
    w_s: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(profile) = &self.profile {
            cfg.profile = profile.clone();
        }
        if let Some(w) = self.w_s {
            cfg.training.w_s = vec![w];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out.join("system.ckpt"))
    }

    fn load(&self) -> Result<JcasSystem> {
        let path = self.checkpoint.as_ref().ok_or_else(|| Error::Config("--checkpoint is required".into()))?;
        Ok(load_system(path)?.0)
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(c) => train(&c),
        Command::Calibrate(c) => calibrate(&c),
        Command::EvalComm(c) => {
            let cfg = c.config()?;
            let system = c.load()?;
            let rows = eval_comm(&system, &cfg.eval.comm_snr_db, cfg.eval.comm_symbols, &comm_rng(cfg.seed))?;
            finish(&c.out, "eval-comm", &cfg, &rows)
        }
        Command::EvalSensing(c) => {
            let cfg = c.config()?;
            let system = c.load()?;
            let e = &cfg.eval;
            let rows = eval_sensing(&system, &e.sense_snr_db, &e.n_win, e.sense_scenes, &sensing_rng(cfg.seed))?;
            finish(&c.out, "eval-sensing", &cfg, &rows)
        }
        Command::Beampattern(c) => {
            let cfg = c.config()?;
            let system = c.load()?;
            let pattern = system_pattern(&system, cfg.eval.pattern_grid)?;
            ensure_dir(&c.out)?;
            let w_s = Some(system.w_s);
            write_patterns(create_file(&c.out.join("beampattern.csv"))?, &[("nn".into(), w_s, pattern.clone())])?;
            finish(&c.out, "beampattern", &cfg, &pattern.rows("nn", w_s))
        }
        Command::Baseline(c) => {
            let cfg = c.config()?;
            let scenario = cfg.scenario()?;
            let beam = match &c.checkpoint {
                Some(_) => c.load()?.beam()?,
                None => BeamWeights::uniform(scenario.antennas),
            };
            let e = &cfg.eval;
            let rows =
                eval_sensing_baselines(&scenario, &beam, &e.sense_snr_db, &e.n_win, e.sense_scenes, &sensing_rng(cfg.seed))?;
            finish(&c.out, "baseline", &cfg, &rows)
        }
        Command::Sweep(c) => {
            let cfg = c.config()?;
            let out = sweep(&cfg, &c.out)?;
            eprintln!("wrote {} rows to {}", out.rows.len(), out.metrics.display());
            Ok(())
        }
    }
}

fn train(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let w_s = cfg.training.w_s[0];
    ensure_dir(&c.out)?;
    let mut log = std::io::BufWriter::new(create_file(&c.out.join("train.log"))?);
    let (system, optimizers, _) = train_system(&cfg, w_s, Some(&mut log))?;
    log.flush()?;
    let path = c.checkpoint_path();
    save_system(&path, &system, Some(&optimizers))?;
    RunManifest::new("train", &cfg).write(&c.out, &cfg)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn calibrate(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let path = c.checkpoint.as_ref().ok_or_else(|| Error::Config("--checkpoint is required".into()))?;
    let (mut system, optimizers) = load_system(path)?;
    let report = calibrate_system(&mut system, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    save_system(path, &system, optimizers.as_ref())?;
    let n = cfg.training.calibration_samples as u64;
    let rows: Vec<MetricRow> = report
        .empirical
        .iter()
        .map(|&(n_win, pf)| {
            let se = (pf * (1.0 - pf) / n as f64).sqrt();
            MetricRow::new("nn-calibration", "pf", pf, n, se).at_window(n_win).at_weight(Some(system.w_s))
        })
        .collect();
    finish(&c.out, "calibrate", &cfg, &rows)
}

fn finish(out: &Path, command: &str, cfg: &ExperimentConfig, rows: &[MetricRow]) -> Result<()> {
    ensure_dir(out)?;
    write_csv(create_file(&out.join("metrics.csv"))?, rows)?;
    RunManifest::new(command, cfg).write(out, cfg)?;
    Ok(())
}
