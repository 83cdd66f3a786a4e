//! Metrics, sweeps and experiment configuration.

mod comm;
pub mod config;
mod metrics;
mod pattern;
mod run;
mod sensing;

pub use comm::eval_comm;
pub use config::ExperimentConfig;
pub use metrics::{find_row, mean_stderr, proportion, read_csv, write_csv, MetricRow};
pub use pattern::{eval_beampattern, write_patterns, BeamPattern};
pub use run::{
    calibrate_system, comm_rng, evaluate_system, initial_system, sensing_rng, sweep, system_pattern, train_system,
    RunManifest, SweepOutput,
};
pub(crate) use run::{create_file, ensure_dir};
pub use sensing::{eval_sensing, eval_sensing_baselines, rmse};
