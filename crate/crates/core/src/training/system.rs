use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::neural::{build_component, AdamState, ComponentKind, FeatureScaling, Head, Mlp, MlpGrads, VectorAdam};
use crate::numerics::{Complex64, SeededRng};
use crate::waveform::{BeamWeights, Constellation};

use super::schedule::Scenario;

/// Source of the transmit beam.
#[derive(Debug, Clone, PartialEq)]
pub enum Beamformer {
    /// Network mapping the four region bounds to `2K` raw weights.
    Network(Mlp),
    /// Trainable raw weights (`K` real parts, then `K` imaginary parts).
    Direct(Vec<f64>),
}

impl Beamformer {
    pub fn is_network(&self) -> bool {
        matches!(self, Beamformer::Network(_))
    }
}

/// Per-window detection offsets `N_win → T_off`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationTable {
    offsets: BTreeMap<usize, f64>,
}

impl CalibrationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n_win: usize, offset: f64) {
        self.offsets.insert(n_win, offset);
    }

    pub fn offset(&self, n_win: usize) -> Result<f64> {
        self.offsets.get(&n_win).copied().ok_or(Error::MissingCalibration(n_win))
    }

    pub fn covers(&self, n_win: (usize, usize)) -> bool {
        (n_win.0..=n_win.1).all(|n| self.offsets.contains_key(&n))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.offsets.iter().map(|(&n, &o)| (n, o))
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// The complete transceiver: beamformer, communication decoder, angle estimator
/// and detector, plus the scenario it is trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct JcasSystem {
    pub scenario: Scenario,
    pub constellation: Constellation,
    pub beamformer: Beamformer,
    pub decoder: Mlp,
    pub angle: Mlp,
    pub detection: Mlp,
    pub scaling: FeatureScaling,
    pub calibration: Option<CalibrationTable>,
    pub seed: u64,
    pub phase: String,
    pub w_s: f64,
}

impl JcasSystem {
    /// Fresh system with initial weights drawn from `seed`.
    pub fn new(scenario: Scenario, direct_beam: bool, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let constellation = Constellation::qam(scenario.order)?;
        let (k, m) = (scenario.antennas, scenario.order);
        let root = SeededRng::new(seed, 0);
        let net = |kind: ComponentKind, stream: u64| -> Result<Mlp> {
            Ok(Mlp::new(build_component(kind, k, m)?, &mut root.split(stream)))
        };
        let beamformer = if direct_beam {
            let mut rng = root.split(10);
            Beamformer::Direct((0..2 * k).map(|_| rng.normal()).collect())
        } else {
            Beamformer::Network(net(ComponentKind::Beamformer, 1)?)
        };
        let scaling = FeatureScaling {
            max_window: scenario.n_win.1,
        };
        Ok(Self {
            decoder: net(ComponentKind::Decoder, 2)?,
            angle: net(ComponentKind::Angle, 3)?,
            detection: net(ComponentKind::Detection, 4)?,
            beamformer,
            constellation,
            scaling,
            scenario,
            calibration: None,
            seed,
            phase: "init".into(),
            w_s: 0.0,
        })
    }

    pub fn antennas(&self) -> usize {
        self.scenario.antennas
    }

    /// Beamformer network input: communication bounds, then sensing bounds (radians).
    pub fn region_input(&self) -> [f64; 4] {
        let (c, s) = (self.scenario.comm_region, self.scenario.sense_region);
        [c.min(), c.max(), s.min(), s.max()]
    }

    /// Pre-normalization beam weights as `2K` reals.
    pub fn beam_raw(&self) -> Result<Vec<f64>> {
        match &self.beamformer {
            Beamformer::Network(net) => {
                let input = self.region_input();
                let x = ndarray::ArrayView2::from_shape((1, 4), &input[..])
                    .map_err(|e| Error::Precondition(e.to_string()))?;
                Ok(net.forward_batch(x)?.raw.row(0).to_vec())
            }
            Beamformer::Direct(raw) => Ok(raw.clone()),
        }
    }

    /// Unit-power transmit beam.
    pub fn beam(&self) -> Result<BeamWeights> {
        let unit = Head::BeamNormalized.apply(&self.beam_raw()?, 0.0);
        let k = unit.len() / 2;
        BeamWeights::normalized((0..k).map(|i| Complex64::new(unit[i], unit[k + i])).collect())
    }

    pub fn calibration(&self) -> Result<&CalibrationTable> {
        self.calibration
            .as_ref()
            .ok_or(Error::MissingCalibration(self.scenario.n_win.0))
    }

    pub fn is_finite(&self) -> bool {
        let beam = match &self.beamformer {
            Beamformer::Network(n) => n.params.is_finite(),
            Beamformer::Direct(r) => r.iter().all(|x| x.is_finite()),
        };
        beam && self.decoder.params.is_finite() && self.angle.params.is_finite() && self.detection.params.is_finite()
    }
}

/// Gradient w.r.t. the beamformer parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamGrad {
    Network(MlpGrads),
    Direct(Vec<f64>),
}

/// Gradients of the total loss w.r.t. every component.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGrads {
    pub beamformer: BeamGrad,
    pub decoder: MlpGrads,
    pub angle: MlpGrads,
    pub detection: MlpGrads,
}

/// Optimizer state of the beamformer.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamOptimizer {
    Network(AdamState),
    Direct(VectorAdam),
}

/// One Adam state per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub beamformer: BeamOptimizer,
    pub decoder: AdamState,
    pub angle: AdamState,
    pub detection: AdamState,
}

impl Optimizers {
    pub fn new(system: &JcasSystem, learning_rate: f64) -> Self {
        let beamformer = match &system.beamformer {
            Beamformer::Network(n) => BeamOptimizer::Network(AdamState::new(&n.spec, learning_rate)),
            Beamformer::Direct(r) => BeamOptimizer::Direct(VectorAdam::new(r.len(), learning_rate)),
        };
        Self {
            beamformer,
            decoder: AdamState::new(&system.decoder.spec, learning_rate),
            angle: AdamState::new(&system.angle.spec, learning_rate),
            detection: AdamState::new(&system.detection.spec, learning_rate),
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        match &mut self.beamformer {
            BeamOptimizer::Network(a) => a.learning_rate = lr,
            BeamOptimizer::Direct(a) => a.learning_rate = lr,
        }
        self.decoder.learning_rate = lr;
        self.angle.learning_rate = lr;
        self.detection.learning_rate = lr;
    }
}
