//! Binary checkpoint container for trained components.
//!
//! Each component is stored as a text header followed by raw parameters:
//!
//! ```text
//! component angle
//! widths 514,128,64,64,16,1
//! head scaled-tanh
//! seed 42
//! phase finetune
//! params 76545
//! adam 5000 0.0001 0.9 0.999 0.00000001     (optional line)
//! end
//! <params × f64 little-endian>               weights row-major (fan_in × fan_out), then bias, per layer
//! <params × f64 LE first moments>            only when the adam line is present
//! <params × f64 LE second moments>           only when the adam line is present
//! ```

use std::io::{BufRead, Read, Write};

use super::adam::AdamState;
use super::components::ComponentKind;
use super::heads::Head;
use super::mlp::{Mlp, MlpParams, MlpSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRecord {
    pub kind: ComponentKind,
    pub net: Mlp,
    pub optimizer: Option<AdamState>,
    pub seed: u64,
    pub phase: String,
}

pub fn write_component<W: Write>(out: &mut W, record: &ComponentRecord) -> Result<()> {
    let spec = &record.net.spec;
    let widths: Vec<String> = spec.widths.iter().map(|w| w.to_string()).collect();
    writeln!(out, "component {}", record.kind.name())?;
    writeln!(out, "widths {}", widths.join(","))?;
    writeln!(out, "head {}", spec.head.name())?;
    writeln!(out, "seed {}", record.seed)?;
    writeln!(out, "phase {}", record.phase)?;
    writeln!(out, "params {}", spec.parameter_count())?;
    if let Some(adam) = &record.optimizer {
        writeln!(
            out,
            "adam {} {} {} {} {}",
            adam.step, adam.learning_rate, adam.beta1, adam.beta2, adam.epsilon
        )?;
    }
    writeln!(out, "end")?;
    write_f64s(out, &record.net.params.flatten())?;
    if let Some(adam) = &record.optimizer {
        let (m, v) = adam.moments();
        write_f64s(out, &m)?;
        write_f64s(out, &v)?;
    }
    Ok(())
}

pub fn read_component<R: BufRead>(input: &mut R) -> Result<ComponentRecord> {
    let mut kind = None;
    let mut widths = None;
    let mut head = None;
    let mut seed = None;
    let mut phase = None;
    let mut count = None;
    let mut adam_line = None;
    loop {
        let line = read_line(input)?;
        let (key, value) = line.split_once(' ').unwrap_or((line.as_str(), ""));
        match key {
            "component" => {
                kind = Some(
                    ComponentKind::from_name(value)
                        .ok_or_else(|| Error::Checkpoint(format!("unknown component '{value}'")))?,
                )
            }
            "widths" => {
                widths = Some(
                    value
                        .split(',')
                        .map(|w| w.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Error::Checkpoint(format!("widths: {e}")))?,
                )
            }
            "head" => head = Some(Head::from_name(value).ok_or_else(|| Error::Checkpoint(format!("unknown head '{value}'")))?),
            "seed" => seed = Some(parse(value, "seed")?),
            "phase" => phase = Some(value.to_string()),
            "params" => count = Some(parse::<usize>(value, "params")?),
            "adam" => adam_line = Some(value.to_string()),
            "end" => break,
            other => return Err(Error::Checkpoint(format!("unexpected header key '{other}'"))),
        }
    }
    let missing = |what: &str| Error::Checkpoint(format!("component header lacks '{what}'"));
    let kind = kind.ok_or_else(|| missing("component"))?;
    let spec = MlpSpec::new(widths.ok_or_else(|| missing("widths"))?, head.ok_or_else(|| missing("head"))?)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = count.ok_or_else(|| missing("params"))?;
    if count != spec.parameter_count() {
        return Err(Error::Checkpoint(format!(
            "header announces {count} parameters, widths imply {}",
            spec.parameter_count()
        )));
    }
    let params = MlpParams::unflatten(&spec, &read_f64s(input, count)?)?;
    let optimizer = match adam_line {
        None => None,
        Some(line) => {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::Checkpoint(format!("malformed adam line '{line}'")));
            }
            let mut state = AdamState::new(&spec, parse(fields[1], "learning rate")?);
            state.step = parse(fields[0], "adam step")?;
            state.beta1 = parse(fields[2], "beta1")?;
            state.beta2 = parse(fields[3], "beta2")?;
            state.epsilon = parse(fields[4], "epsilon")?;
            let m = read_f64s(input, count)?;
            let v = read_f64s(input, count)?;
            Some(state.with_moments(&spec, &m, &v)?)
        }
    };
    Ok(ComponentRecord {
        kind,
        net: Mlp::from_parts(spec, params)?,
        optimizer,
        seed: seed.ok_or_else(|| missing("seed"))?,
        phase: phase.ok_or_else(|| missing("phase"))?,
    })
}

pub(crate) fn read_line<R: BufRead>(input: &mut R) -> Result<String> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Err(Error::Checkpoint("unexpected end of file in header".into()));
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_string())
}

pub(crate) fn parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Checkpoint(format!("{what} '{value}': {e}")))
}

pub(crate) fn write_f64s<W: Write>(out: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_f64s<R: Read>(input: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated parameter block: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}
