#![allow(dead_code)]

use jcas::neural::{ComponentKind, MlpParams};
use jcas::numerics::SeededRng;
use jcas::training::*;

pub fn small_scenario() -> Scenario {
    Scenario {
        antennas: 4,
        order: 16,
        ..Scenario::default()
    }
}

pub fn flat(system: &JcasSystem, kind: ComponentKind) -> Vec<f64> {
    match kind {
        ComponentKind::Beamformer => match &system.beamformer {
            Beamformer::Network(n) => n.params.flatten(),
            Beamformer::Direct(r) => r.clone(),
        },
        ComponentKind::Decoder => system.decoder.params.flatten(),
        ComponentKind::Angle => system.angle.params.flatten(),
        ComponentKind::Detection => system.detection.params.flatten(),
    }
}

pub fn set_flat(system: &mut JcasSystem, kind: ComponentKind, values: &[f64]) {
    let net = match kind {
        ComponentKind::Beamformer => match &mut system.beamformer {
            Beamformer::Network(n) => n,
            Beamformer::Direct(r) => {
                r.copy_from_slice(values);
                return;
            }
        },
        ComponentKind::Decoder => &mut system.decoder,
        ComponentKind::Angle => &mut system.angle,
        ComponentKind::Detection => &mut system.detection,
    };
    net.params = MlpParams::unflatten(&net.spec, values).unwrap();
}

pub fn grad_flat(grads: &SystemGrads, kind: ComponentKind) -> Vec<f64> {
    match kind {
        ComponentKind::Beamformer => match &grads.beamformer {
            BeamGrad::Network(g) => g.flatten(),
            BeamGrad::Direct(g) => g.clone(),
        },
        ComponentKind::Decoder => grads.decoder.flatten(),
        ComponentKind::Angle => grads.angle.flatten(),
        ComponentKind::Detection => grads.detection.flatten(),
    }
}

/// Worst relative error per component, in `ComponentKind::ALL` order, between
/// analytic and central-difference directional derivatives over `batches`
/// random micro-batches of 24 symbols at K=4, M=16.
pub fn gradient_errors(direct_beam: bool, batches: u64, angle_loss: AngleLossKind) -> [f64; 4] {
    let scenario = small_scenario();
    let weights = Phase::Finetune.weights(0.5);
    let mut worst = [0.0f64; 4];
    for b in 0..batches {
        let mut system = JcasSystem::new(scenario.clone(), direct_beam, 100 + b).unwrap();
        let rng = SeededRng::new(7, b);
        let spec = scenario.draw_spec();
        let batch = Batch::draw(&scenario, &system.constellation, 24, &spec, &rng).unwrap();
        let base = evaluate(&system, &batch, weights, PassOptions { angle_loss, offset: None, gradients: true }).unwrap();
        let grads = base.grads.unwrap();
        let fixed = PassOptions { angle_loss, offset: Some(base.offset), gradients: false };
        let mut dir_rng = SeededRng::new(8, b);
        for (slot, kind) in ComponentKind::ALL.into_iter().enumerate() {
            let p0 = flat(&system, kind);
            let g = grad_flat(&grads, kind);
            let d: Vec<f64> = (0..p0.len()).map(|_| dir_rng.normal()).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let analytic: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / norm;
            let h = 1e-5;
            let mut at = |s: f64| {
                let p: Vec<f64> = p0.iter().zip(&d).map(|(p, d)| p + s * h * d / norm).collect();
                set_flat(&mut system, kind, &p);
                evaluate(&system, &batch, weights, fixed).unwrap().breakdown.total
            };
            let numeric = (at(1.0) - at(-1.0)) / (2.0 * h);
            set_flat(&mut system, kind, &p0);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst[slot] = worst[slot].max(err);
        }
    }
    worst
}
