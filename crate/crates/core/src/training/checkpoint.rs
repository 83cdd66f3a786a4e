//! Whole-system checkpoints.
//!
//! A text header describing the scenario, followed by the component sections
//! of the neural checkpoint format:
//!
//! ```text
//! jcas-system 1
//! antennas 16
//! order 16
//! comm_region 0.5235987755982988 0.8726646259971648      radians
//! sense_region -0.3490658503988659 0.3490658503988659
//! fading_power 1
//! reflection_power 1
//! comm_snr_db 0 30
//! sense_snr_db -10 10
//! n_win 1 15
//! target_prior 0.5
//! p_f 0.01
//! offset batch-quantile                                   or zero
//! seed 42
//! phase finetune
//! w_s 0.9
//! calibration 1:-3.25,2:-2.5,...                          or none
//! beam network                                            or direct
//! direct_adam <step> <lr> <beta1> <beta2> <epsilon>       optional, direct beams only
//! end
//! <2K × f64 LE raw weights>                               direct beams only
//! <2K × f64 LE first moments, 2K × f64 LE second moments> with direct_adam
//! <component sections: beamformer (network beams only), decoder, angle, detection>
//! ```

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::neural::{parse_field, read_component, read_f64s, read_line, write_component, write_f64s, ComponentKind, ComponentRecord, FeatureScaling, Mlp, VectorAdam};
use crate::waveform::{AngleRegion, Constellation};

use super::schedule::{Scenario, TrainingOffset};
use super::system::{BeamOptimizer, Beamformer, CalibrationTable, JcasSystem, Optimizers};

const MAGIC: &str = "jcas-system 1";

pub fn write_system<W: Write>(out: &mut W, system: &JcasSystem, optimizers: Option<&Optimizers>) -> Result<()> {
    let s = &system.scenario;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "antennas {}", s.antennas)?;
    writeln!(out, "order {}", s.order)?;
    writeln!(out, "comm_region {} {}", s.comm_region.min(), s.comm_region.max())?;
    writeln!(out, "sense_region {} {}", s.sense_region.min(), s.sense_region.max())?;
    writeln!(out, "fading_power {}", s.fading_power)?;
    writeln!(out, "reflection_power {}", s.reflection_power)?;
    writeln!(out, "comm_snr_db {} {}", s.comm_snr_db.0, s.comm_snr_db.1)?;
    writeln!(out, "sense_snr_db {} {}", s.sense_snr_db.0, s.sense_snr_db.1)?;
    writeln!(out, "n_win {} {}", s.n_win.0, s.n_win.1)?;
    writeln!(out, "target_prior {}", s.target_prior)?;
    writeln!(out, "p_f {}", s.p_f)?;
    let offset = match s.offset {
        TrainingOffset::Zero => "zero",
        TrainingOffset::BatchQuantile => "batch-quantile",
    };
    writeln!(out, "offset {offset}")?;
    writeln!(out, "seed {}", system.seed)?;
    writeln!(out, "phase {}", system.phase)?;
    writeln!(out, "w_s {}", system.w_s)?;
    match &system.calibration {
        None => writeln!(out, "calibration none")?,
        Some(t) => {
            let entries: Vec<String> = t.iter().map(|(n, o)| format!("{n}:{o}")).collect();
            writeln!(out, "calibration {}", entries.join(","))?;
        }
    }
    let direct_adam = match optimizers.map(|o| &o.beamformer) {
        Some(BeamOptimizer::Direct(a)) => Some(a),
        _ => None,
    };
    match &system.beamformer {
        Beamformer::Network(_) => writeln!(out, "beam network")?,
        Beamformer::Direct(_) => {
            writeln!(out, "beam direct")?;
            if let Some(a) = direct_adam {
                writeln!(out, "direct_adam {} {} {} {} {}", a.step, a.learning_rate, a.beta1, a.beta2, a.epsilon)?;
            }
        }
    }
    writeln!(out, "end")?;
    if let Beamformer::Direct(raw) = &system.beamformer {
        write_f64s(out, raw)?;
        if let Some(a) = direct_adam {
            write_f64s(out, &a.m)?;
            write_f64s(out, &a.v)?;
        }
    }

    let record = |kind: ComponentKind, net: &Mlp, adam| ComponentRecord {
        kind,
        net: net.clone(),
        optimizer: adam,
        seed: system.seed,
        phase: system.phase.clone(),
    };
    if let Beamformer::Network(net) = &system.beamformer {
        let adam = match optimizers.map(|o| &o.beamformer) {
            Some(BeamOptimizer::Network(a)) => Some(a.clone()),
            _ => None,
        };
        write_component(out, &record(ComponentKind::Beamformer, net, adam))?;
    }
    write_component(out, &record(ComponentKind::Decoder, &system.decoder, optimizers.map(|o| o.decoder.clone())))?;
    write_component(out, &record(ComponentKind::Angle, &system.angle, optimizers.map(|o| o.angle.clone())))?;
    write_component(out, &record(ComponentKind::Detection, &system.detection, optimizers.map(|o| o.detection.clone())))?;
    Ok(())
}

fn pair<T: std::str::FromStr>(value: &str, what: &str) -> Result<(T, T)>
where
    T::Err: std::fmt::Display,
{
    let (a, b) = value
        .split_once(' ')
        .ok_or_else(|| Error::Checkpoint(format!("{what} needs two values, got '{value}'")))?;
    Ok((parse_field(a, what)?, parse_field(b, what)?))
}

fn region(value: &str, what: &str) -> Result<AngleRegion> {
    let (lo, hi) = pair(value, what)?;
    AngleRegion::new(lo, hi).map_err(|e| Error::Checkpoint(format!("{what}: {e}")))
}

/// Reads a system and, when every component carries one, its optimizer state.
pub fn read_system<R: BufRead>(input: &mut R) -> Result<(JcasSystem, Option<Optimizers>)> {
    if read_line(input)? != MAGIC {
        return Err(Error::Checkpoint("not a system checkpoint".into()));
    }
    let mut scenario = Scenario::default();
    let mut seed = 0;
    let mut phase = String::new();
    let mut w_s = 0.0;
    let mut calibration = None;
    let mut direct = None;
    let mut direct_adam: Option<VectorAdam> = None;
    loop {
        let line = read_line(input)?;
        let (key, value) = line.split_once(' ').unwrap_or((line.as_str(), ""));
        match key {
            "antennas" => scenario.antennas = parse_field(value, key)?,
            "order" => scenario.order = parse_field(value, key)?,
            "comm_region" => scenario.comm_region = region(value, key)?,
            "sense_region" => scenario.sense_region = region(value, key)?,
            "fading_power" => scenario.fading_power = parse_field(value, key)?,
            "reflection_power" => scenario.reflection_power = parse_field(value, key)?,
            "comm_snr_db" => scenario.comm_snr_db = pair(value, key)?,
            "sense_snr_db" => scenario.sense_snr_db = pair(value, key)?,
            "n_win" => scenario.n_win = pair(value, key)?,
            "target_prior" => scenario.target_prior = parse_field(value, key)?,
            "p_f" => scenario.p_f = parse_field(value, key)?,
            "offset" => {
                scenario.offset = match value {
                    "zero" => TrainingOffset::Zero,
                    "batch-quantile" => TrainingOffset::BatchQuantile,
                    other => return Err(Error::Checkpoint(format!("unknown offset rule '{other}'"))),
                }
            }
            "seed" => seed = parse_field(value, key)?,
            "phase" => phase = value.to_string(),
            "w_s" => w_s = parse_field(value, key)?,
            "calibration" => {
                if value != "none" {
                    let mut t = CalibrationTable::new();
                    for entry in value.split(',') {
                        let (n, o) = entry
                            .split_once(':')
                            .ok_or_else(|| Error::Checkpoint(format!("calibration entry '{entry}'")))?;
                        t.insert(parse_field(n, "calibration window")?, parse_field(o, "calibration offset")?);
                    }
                    calibration = Some(t);
                }
            }
            "beam" => {
                direct = Some(match value {
                    "network" => false,
                    "direct" => true,
                    other => return Err(Error::Checkpoint(format!("unknown beam kind '{other}'"))),
                })
            }
            "direct_adam" => {
                let f: Vec<&str> = value.split_whitespace().collect();
                if f.len() != 5 {
                    return Err(Error::Checkpoint(format!("malformed direct_adam line '{value}'")));
                }
                let mut a = VectorAdam::new(0, parse_field(f[1], "learning rate")?);
                a.step = parse_field(f[0], "adam step")?;
                a.beta1 = parse_field(f[2], "beta1")?;
                a.beta2 = parse_field(f[3], "beta2")?;
                a.epsilon = parse_field(f[4], "epsilon")?;
                direct_adam = Some(a);
            }
            "end" => break,
            other => return Err(Error::Checkpoint(format!("unexpected header key '{other}'"))),
        }
    }
    scenario.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    let direct = direct.ok_or_else(|| Error::Checkpoint("header lacks 'beam'".into()))?;
    let k = scenario.antennas;

    let mut beam_opt = None;
    let beamformer = if direct {
        let raw = read_f64s(input, 2 * k)?;
        if let Some(mut a) = direct_adam {
            a.m = read_f64s(input, 2 * k)?;
            a.v = read_f64s(input, 2 * k)?;
            beam_opt = Some(BeamOptimizer::Direct(a));
        }
        Beamformer::Direct(raw)
    } else {
        let rec = expect(input, ComponentKind::Beamformer)?;
        beam_opt = rec.optimizer.map(BeamOptimizer::Network);
        Beamformer::Network(rec.net)
    };
    let decoder = expect(input, ComponentKind::Decoder)?;
    let angle = expect(input, ComponentKind::Angle)?;
    let detection = expect(input, ComponentKind::Detection)?;

    let optimizers = match (beam_opt, decoder.optimizer, angle.optimizer, detection.optimizer) {
        (Some(beamformer), Some(decoder), Some(angle), Some(detection)) => Some(Optimizers {
            beamformer,
            decoder,
            angle,
            detection,
        }),
        _ => None,
    };
    let system = JcasSystem {
        constellation: Constellation::qam(scenario.order).map_err(|e| Error::Checkpoint(e.to_string()))?,
        scaling: FeatureScaling {
            max_window: scenario.n_win.1,
        },
        scenario,
        beamformer,
        decoder: decoder.net,
        angle: angle.net,
        detection: detection.net,
        calibration,
        seed,
        phase,
        w_s,
    };
    Ok((system, optimizers))
}

fn expect<R: BufRead>(input: &mut R, kind: ComponentKind) -> Result<ComponentRecord> {
    let rec = read_component(input)?;
    if rec.kind != kind {
        return Err(Error::Checkpoint(format!("expected {} section, found {}", kind.name(), rec.kind.name())));
    }
    Ok(rec)
}

/// Writes a checkpoint to `path`.
pub fn save_system(path: &std::path::Path, system: &JcasSystem, optimizers: Option<&Optimizers>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = std::io::BufWriter::new(file);
    write_system(&mut w, system, optimizers)?;
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint from `path`.
pub fn load_system(path: &std::path::Path) -> Result<(JcasSystem, Option<Optimizers>)> {
    let file = std::fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_system(&mut std::io::BufReader::new(file))
}
