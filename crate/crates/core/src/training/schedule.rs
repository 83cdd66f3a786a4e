use crate::error::{Error, Result};
use crate::neural::DEFAULT_LEARNING_RATE;
use crate::waveform::AngleRegion;

/// Named training budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// Reduced budget that fits a laptop run.
    #[default]
    Desk,
    /// Full symbol budget: 2.5e7 pre-training and 5e7 fine-tuning symbols.
    Full,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Profile::Desk),
            "full" => Some(Profile::Full),
            _ => None,
        }
    }
}

/// Learning rate used by the desk profile.
///
/// A few hundred steps at `1e-4` leave the beamformer close to its random
/// initialisation, so the reduced budget trains ten times faster.
pub const DESK_LEARNING_RATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    /// Symbols consumed by each of the two pre-training phases.
    pub pretrain_symbols: u64,
    pub finetune_symbols: u64,
    pub batch_symbols: usize,
    pub learning_rate: f64,
}

impl TrainSchedule {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self {
                pretrain_symbols: 1_000_000,
                finetune_symbols: 2_000_000,
                batch_symbols: 10_000,
                learning_rate: DESK_LEARNING_RATE,
            },
            Profile::Full => Self {
                pretrain_symbols: 25_000_000,
                finetune_symbols: 50_000_000,
                batch_symbols: 10_000,
                learning_rate: DEFAULT_LEARNING_RATE,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pretrain_symbols == 0 || self.finetune_symbols == 0 || self.batch_symbols == 0 {
            return Err(Error::Config("symbol counts and batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        Ok(())
    }

    /// Optimizer steps needed to consume `symbols`, rounding up.
    pub fn steps_for(&self, symbols: u64) -> u64 {
        symbols.div_ceil(self.batch_symbols as u64)
    }
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self::for_profile(Profile::Desk)
    }
}

/// How the detection offset is chosen while the detector is being trained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TrainingOffset {
    /// `T_off = 0`.
    Zero,
    /// `T_off` is minus the `1 − p_f` quantile of the target-absent logits of
    /// the current batch, treated as a constant when differentiating.
    #[default]
    BatchQuantile,
}

/// Randomisation of the operating conditions seen during training.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub antennas: usize,
    pub order: usize,
    pub comm_region: AngleRegion,
    pub sense_region: AngleRegion,
    /// σ_c²
    pub fading_power: f64,
    /// σ_s²
    pub reflection_power: f64,
    /// Raw communication SNR range in dB, sampled uniformly in dB per symbol.
    pub comm_snr_db: (f64, f64),
    /// Raw sensing SNR range in dB, sampled uniformly in dB per window.
    pub sense_snr_db: (f64, f64),
    pub n_win: (usize, usize),
    pub target_prior: f64,
    pub p_f: f64,
    pub offset: TrainingOffset,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            antennas: 16,
            order: 16,
            comm_region: AngleRegion::from_degrees(30.0, 50.0).expect("valid region"),
            sense_region: AngleRegion::from_degrees(-20.0, 20.0).expect("valid region"),
            fading_power: 1.0,
            reflection_power: 1.0,
            comm_snr_db: (0.0, 30.0),
            sense_snr_db: (-10.0, 10.0),
            n_win: (1, 15),
            target_prior: 0.5,
            p_f: 1e-2,
            offset: TrainingOffset::BatchQuantile,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.antennas < 2 {
            return Err(Error::Config(format!("need at least 2 antennas, got {}", self.antennas)));
        }
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ordered(self.comm_snr_db) || !ordered(self.sense_snr_db) {
            return Err(Error::Config("SNR ranges must be finite with min ≤ max".into()));
        }
        if self.n_win.0 == 0 || self.n_win.0 > self.n_win.1 {
            return Err(Error::Config(format!("invalid window range {:?}", self.n_win)));
        }
        if !(self.fading_power > 0.0 && self.reflection_power > 0.0) {
            return Err(Error::Config("fading and reflection powers must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.target_prior) {
            return Err(Error::Config(format!("target prior {} outside [0, 1]", self.target_prior)));
        }
        if !(self.p_f > 0.0 && self.p_f < 1.0) {
            return Err(Error::Config(format!("false-alarm target {} outside (0, 1)", self.p_f)));
        }
        Ok(())
    }

    /// `σ_n²` for a raw communication SNR in dB.
    pub fn comm_noise_power(&self, snr_db: f64) -> f64 {
        self.fading_power * 10f64.powf(-snr_db / 10.0)
    }

    /// `σ_ns²` for a raw sensing SNR in dB.
    pub fn sense_noise_power(&self, snr_db: f64) -> f64 {
        self.reflection_power * 10f64.powf(-snr_db / 10.0)
    }
}
