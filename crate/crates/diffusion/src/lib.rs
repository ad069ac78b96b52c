//! Conditional diffusion refinement of coarse room layouts.
//!
//! The crate turns a coarse layout (room rectangles with types and doors)
//! plus a target loop structure into refined integer-coordinate floorplans:
//!
//! * [`schedule`] — noise schedules (cosine / linear ᾱ tables);
//! * [`ops`] — the forward/reverse diffusion algebra over token coordinate
//!   arrays, including the two independent conditioning pathways;
//! * [`train`] — losses, AdamW, and a bitwise-reproducible training loop
//!   with checkpoint/resume and an append-only loss log.
//!
//! Conditioning enters the process twice: a *forward* offset `e(y)` added to
//! every noisy state, and *reverse* condition features visible to the
//! denoiser. Both are independently switchable, which the ablation harness
//! exploits.

pub mod ablate;
pub mod ops;
pub mod sample;
pub mod schedule;
pub mod train;

pub use ablate::{
    ablation_harness, render_conditioning_table, render_rate_table, AblationInput,
    AblationReport, AblationRow,
};
pub use ops::{
    condition_offset, forward_sample, predict_x0, reverse_from_estimate, reverse_step,
    DiffusionConfig, ALPHA_BAR_MIN, DEFAULT_ADJACENCY_EPS,
};
pub use sample::sample;
pub use schedule::{make_schedule, NoiseSchedule, ScheduleKind, ALPHA_BAR_FLOOR_END};
pub use train::{
    moments_path, prepare_item, train, training_losses, AdamW, LossRecord, LossReport,
    TrainConfig, TrainItem, TrainState, DIVERGENCE_STRIKES, LOSS_LOG_HEADER,
};

use thiserror::Error;

/// Everything that can go wrong while configuring, training, or sampling.
#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("training diverged: loss stayed non-finite for {steps} consecutive steps")]
    Diverged { steps: usize },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] floorgen_model::ModelError),
    #[error(transparent)]
    Core(#[from] floorgen_core::CoreError),
}

pub type Result<T> = std::result::Result<T, DiffusionError>;
