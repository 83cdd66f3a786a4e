//! Losses, the end-to-end gradient, the training schedule and threshold calibration.

mod batch;
mod calibrate;
mod checkpoint;
pub mod loss;
mod schedule;
mod system;
mod trainer;

pub use batch::{
    beam_vector, comm_front, decoder_outputs, evaluate, render_scene, sense_front, sensing_outputs, AngleLossKind,
    Batch, CommFront, DrawSpec, LossWeights, PassOptions, PassOutput, Phase, SceneDraw, SenseFront, SensingOutputs,
};
pub use calibrate::{
    calibrate_thresholds, detected, null_windows, offset_from_logits, upper_order_statistic, CalibrationReport,
    CalibrationSpec, OffsetEstimate,
};
pub use checkpoint::{load_system, read_system, save_system, write_system};
pub use loss::{
    loss_angle_legacy, loss_angle_normalized, loss_comm, loss_detect, loss_detect_logits, total_loss, AngleLoss,
    LossBreakdown, TradeoffConfig,
};
pub use schedule::{Profile, Scenario, TrainSchedule, TrainingOffset, DESK_LEARNING_RATE};
pub use system::{BeamGrad, BeamOptimizer, Beamformer, CalibrationTable, JcasSystem, Optimizers, SystemGrads};
pub use trainer::{finetune, pretrain, run_phase, LogRecord, TrainOptions};
