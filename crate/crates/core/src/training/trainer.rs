use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

use super::batch::{evaluate, AngleLossKind, Batch, PassOptions, Phase};
use super::schedule::TrainSchedule;
use super::system::{BeamGrad, BeamOptimizer, Beamformer, JcasSystem, Optimizers, SystemGrads};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub phase: String,
    pub comm: f64,
    pub detect: f64,
    pub angle: f64,
    pub total: f64,
    pub w_s: f64,
    pub seed: u64,
}

/// Shared settings of every training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub schedule: TrainSchedule,
    pub angle_loss: AngleLossKind,
    pub seed: u64,
}

impl TrainOptions {
    pub fn new(schedule: TrainSchedule, seed: u64) -> Self {
        Self {
            schedule,
            angle_loss: AngleLossKind::Normalized,
            seed,
        }
    }
}

/// Runs one phase for `symbols` symbols and returns its log.
///
/// Batch `b` of a phase is drawn from `split2(phase, b)` of the seed stream,
/// so a phase restarted from a checkpoint replays the same data.
pub fn run_phase(
    system: &mut JcasSystem,
    optimizers: &mut Optimizers,
    phase: Phase,
    w_s: f64,
    symbols: u64,
    options: &TrainOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<Vec<LogRecord>> {
    options.schedule.validate()?;
    if !(0.0..=1.0).contains(&w_s) {
        return Err(Error::Config(format!("trade-off weight w_s = {w_s} outside [0, 1]")));
    }
    let weights = phase.weights(w_s);
    let steps = options.schedule.steps_for(symbols);
    let root = SeededRng::new(options.seed, 1);
    let spec = system.scenario.draw_spec();
    let pass = PassOptions {
        angle_loss: options.angle_loss,
        offset: None,
        gradients: true,
    };
    let mut records = Vec::with_capacity(steps as usize);
    for step in 0..steps {
        let fail = |detail: String| Error::Training {
            phase: phase.name().into(),
            batch: step as usize,
            detail,
        };
        let size = (symbols - step * options.schedule.batch_symbols as u64).min(options.schedule.batch_symbols as u64);
        let batch = Batch::draw(
            &system.scenario,
            &system.constellation,
            size as usize,
            &spec,
            &root.split2(phase.index(), step),
        )?;
        let out = evaluate(system, &batch, weights, pass).map_err(|e| fail(e.to_string()))?;
        let grads = out.grads.expect("gradients requested");
        apply(system, optimizers, &grads, weights.comm > 0.0, weights.angle > 0.0, weights.detect > 0.0)
            .map_err(|e| fail(e.to_string()))?;
        let b = out.breakdown;
        let record = LogRecord {
            step,
            phase: phase.name().into(),
            comm: b.comm,
            detect: b.detect,
            angle: b.angle,
            total: b.total,
            w_s,
            seed: options.seed,
        };
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{}", serde_json::to_string(&record).expect("plain record"))?;
        }
        records.push(record);
    }
    system.phase = phase.name().into();
    system.w_s = w_s;
    system.seed = options.seed;
    Ok(records)
}

/// Adam step on every component in the active loss path.
fn apply(
    system: &mut JcasSystem,
    opt: &mut Optimizers,
    grads: &SystemGrads,
    decoder: bool,
    angle: bool,
    detection: bool,
) -> Result<()> {
    match (&mut system.beamformer, &mut opt.beamformer, &grads.beamformer) {
        (Beamformer::Network(net), BeamOptimizer::Network(adam), BeamGrad::Network(g)) => adam.step(&mut net.params, g)?,
        (Beamformer::Direct(raw), BeamOptimizer::Direct(adam), BeamGrad::Direct(g)) => adam.step(raw, g)?,
        _ => return Err(Error::Precondition("beamformer, optimizer and gradient kinds differ".into())),
    }
    if decoder {
        opt.decoder.step(&mut system.decoder.params, &grads.decoder)?;
    }
    if angle {
        opt.angle.step(&mut system.angle.params, &grads.angle)?;
    }
    if detection {
        opt.detection.step(&mut system.detection.params, &grads.detection)?;
    }
    Ok(())
}

/// Both pre-training steps: detection loss off, then angle loss off.
pub fn pretrain(
    system: &mut JcasSystem,
    optimizers: &mut Optimizers,
    w_s: f64,
    options: &TrainOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<Vec<LogRecord>> {
    let symbols = options.schedule.pretrain_symbols;
    let first = log.as_mut().map(|w| &mut **w as &mut dyn Write);
    let mut records = run_phase(system, optimizers, Phase::PretrainAngle, w_s, symbols, options, first)?;
    records.extend(run_phase(system, optimizers, Phase::PretrainDetect, w_s, symbols, options, log)?);
    Ok(records)
}

/// Joint training on the full loss.
pub fn finetune(
    system: &mut JcasSystem,
    optimizers: &mut Optimizers,
    w_s: f64,
    options: &TrainOptions,
    log: Option<&mut dyn Write>,
) -> Result<Vec<LogRecord>> {
    run_phase(system, optimizers, Phase::Finetune, w_s, options.schedule.finetune_symbols, options, log)
}
