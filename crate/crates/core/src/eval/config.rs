//! Experiment configuration, read from TOML. Unknown keys are errors.
//!
//! ```toml
//! seed = 1
//! profile = "desk"              # or "full"
//!
//! [system]
//! antennas = 16
//! order = 16
//! comm_region_deg = [30.0, 50.0]
//! sense_region_deg = [-20.0, 20.0]
//! n_win = [1, 15]
//! p_f = 0.01
//! target_prior = 0.5
//! direct_beam = false
//!
//! [training]
//! w_s = [0.9]
//! comm_snr_db = [0.0, 30.0]     # raw, sampled uniformly in dB
//! sense_snr_db = [-10.0, 10.0]
//! angle_loss = "normalized"     # or "legacy"
//! offset = "batch-quantile"     # or "zero"
//! calibration_samples = 10000
//! # pretrain_symbols, finetune_symbols, batch_symbols, learning_rate override the profile
//!
//! [eval]
//! comm_snr_db = [0.0, 10.0, 20.0, 30.0]
//! comm_symbols = 100000
//! sense_snr_db = [-10.0, -5.0, 0.0, 5.0]
//! n_win = [1, 2, 4, 8, 15]
//! sense_scenes = 10000
//! pattern_grid = 721
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::training::{AngleLossKind, Profile, Scenario, TrainSchedule, TrainingOffset};
use crate::waveform::AngleRegion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub antennas: usize,
    pub order: usize,
    pub comm_region_deg: [f64; 2],
    pub sense_region_deg: [f64; 2],
    pub n_win: [usize; 2],
    pub p_f: f64,
    pub target_prior: f64,
    pub direct_beam: bool,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            antennas: 16,
            order: 16,
            comm_region_deg: [30.0, 50.0],
            sense_region_deg: [-20.0, 20.0],
            n_win: [1, 15],
            p_f: 1e-2,
            target_prior: 0.5,
            direct_beam: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub w_s: Vec<f64>,
    pub comm_snr_db: [f64; 2],
    pub sense_snr_db: [f64; 2],
    pub angle_loss: String,
    pub offset: String,
    pub calibration_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pretrain_symbols: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finetune_symbols: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_symbols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            w_s: vec![0.9],
            comm_snr_db: [0.0, 30.0],
            sense_snr_db: [-10.0, 10.0],
            angle_loss: "normalized".into(),
            offset: "batch-quantile".into(),
            calibration_samples: 10_000,
            pretrain_symbols: None,
            finetune_symbols: None,
            batch_symbols: None,
            learning_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub comm_snr_db: Vec<f64>,
    pub comm_symbols: usize,
    pub sense_snr_db: Vec<f64>,
    pub n_win: Vec<usize>,
    pub sense_scenes: usize,
    pub pattern_grid: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            comm_snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            comm_symbols: 100_000,
            sense_snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            n_win: vec![1, 2, 4, 8, 15],
            sense_scenes: 10_000,
            pattern_grid: 721,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub profile: String,
    pub system: SystemSection,
    pub training: TrainingSection,
    pub eval: EvalSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            profile: "desk".into(),
            system: SystemSection::default(),
            training: TrainingSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.system.antennas < 2 {
            return Err(Error::Config(format!("need at least 2 antennas, got {}", self.system.antennas)));
        }
        self.profile()?;
        self.angle_loss()?;
        self.offset_rule()?;
        self.scenario()?.validate()?;
        self.schedule()?.validate()?;
        let t = &self.training;
        if t.w_s.is_empty() || t.w_s.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Config("w_s grid must be non-empty with values in [0, 1]".into()));
        }
        if t.calibration_samples == 0 {
            return Err(Error::Config("calibration_samples must be at least 1".into()));
        }
        let e = &self.eval;
        if e.comm_snr_db.is_empty() || e.sense_snr_db.is_empty() || e.n_win.is_empty() {
            return Err(Error::Config("evaluation grids must be non-empty".into()));
        }
        if e.comm_symbols == 0 || e.sense_scenes == 0 {
            return Err(Error::Config("evaluation sample counts must be at least 1".into()));
        }
        if e.pattern_grid < 2 {
            return Err(Error::Config("pattern_grid must be at least 2".into()));
        }
        let (lo, hi) = (self.system.n_win[0], self.system.n_win[1]);
        if let Some(n) = e.n_win.iter().find(|&&n| n < lo || n > hi) {
            return Err(Error::Config(format!("evaluation window {n} outside the trained range {lo}..={hi}")));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<Profile> {
        Profile::from_name(&self.profile).ok_or_else(|| Error::Config(format!("unknown profile '{}'", self.profile)))
    }

    pub fn angle_loss(&self) -> Result<AngleLossKind> {
        match self.training.angle_loss.as_str() {
            "normalized" => Ok(AngleLossKind::Normalized),
            "legacy" => Ok(AngleLossKind::Legacy),
            other => Err(Error::Config(format!("unknown angle loss '{other}'"))),
        }
    }

    fn offset_rule(&self) -> Result<TrainingOffset> {
        match self.training.offset.as_str() {
            "batch-quantile" => Ok(TrainingOffset::BatchQuantile),
            "zero" => Ok(TrainingOffset::Zero),
            other => Err(Error::Config(format!("unknown offset rule '{other}'"))),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let s = &self.system;
        let t = &self.training;
        Ok(Scenario {
            antennas: s.antennas,
            order: s.order,
            comm_region: AngleRegion::from_degrees(s.comm_region_deg[0], s.comm_region_deg[1])?,
            sense_region: AngleRegion::from_degrees(s.sense_region_deg[0], s.sense_region_deg[1])?,
            comm_snr_db: (t.comm_snr_db[0], t.comm_snr_db[1]),
            sense_snr_db: (t.sense_snr_db[0], t.sense_snr_db[1]),
            n_win: (s.n_win[0], s.n_win[1]),
            target_prior: s.target_prior,
            p_f: s.p_f,
            offset: self.offset_rule()?,
            ..Scenario::default()
        })
    }

    /// Profile budget with any explicit overrides applied.
    pub fn schedule(&self) -> Result<TrainSchedule> {
        let mut s = TrainSchedule::for_profile(self.profile()?);
        let t = &self.training;
        if let Some(n) = t.pretrain_symbols {
            s.pretrain_symbols = n;
        }
        if let Some(n) = t.finetune_symbols {
            s.finetune_symbols = n;
        }
        if let Some(n) = t.batch_symbols {
            s.batch_symbols = n;
        }
        if let Some(lr) = t.learning_rate {
            s.learning_rate = lr;
        }
        Ok(s)
    }
}
