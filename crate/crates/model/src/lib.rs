//! Denoising network for floorplan token sequences.
//!
//! The network consumes the padded token sequences produced by
//! `floorgen_core::token` and predicts, per token, either a continuous noise
//! estimate (two coordinates) or discrete coordinate bits (sixteen logits).
//! Everything is implemented on plain `f64` matrices with hand-written
//! forward/backward passes so gradients can be verified against finite
//! differences exactly.

pub mod attention;
pub mod checkpoint;
pub mod denoiser;
pub mod features;
pub mod gradcheck;
pub mod nn;

pub use checkpoint::{
    ensure_config, load_checkpoint, load_named_arrays, save_checkpoint, save_named_arrays,
};
pub use denoiser::{BitsForward, Denoiser, Grads, NoiseForward};
pub use features::{
    build_masks, cond_bit_features, cond_noise_features, discrete_features, noise_features,
    MaskSet, BIT_FEATURE_WIDTH, NOISE_FEATURE_WIDTH,
};
pub use gradcheck::{corrupted_gradient_check, gradient_check, GradCheckReport};

use serde::{Deserialize, Serialize};

/// Errors produced by the network layer.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// Invalid hyper-parameter combination.
    #[error("invalid model config: {0}")]
    Config(String),
    /// A token index exceeds a fixed one-hot table size.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A forward pass produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A checkpoint could not be read, written, or does not match the
    /// expected network shape.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    /// Underlying I/O failure while persisting a checkpoint.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Error bubbled up from the geometry layer.
    #[error(transparent)]
    Core(#[from] floorgen_core::CoreError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// How the timestep is communicated to the network.
///
/// `Scalar` relies on the fractional-timestep slot that is always present in
/// the token features.  `Sinusoidal` additionally projects a fixed
/// sin/cos encoding of the timestep into the embedding space and adds it to
/// every token embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimestepEncoding {
    #[default]
    Scalar,
    Sinusoidal,
}

/// Hyper-parameters of the denoising network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiserConfig {
    /// Embedding width shared by both branches.
    pub d_model: usize,
    /// Number of attention heads; must divide `d_model`.
    pub heads: usize,
    /// Attention blocks in the continuous (noise) branch.
    pub blocks: usize,
    /// Attention blocks in the discrete (bit) branch.
    pub discrete_blocks: usize,
    /// Feed-forward hidden width as a multiple of `d_model`.
    pub ff_mult: usize,
    /// Timestep conditioning mode.
    pub timestep_encoding: TimestepEncoding,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig {
            d_model: 512,
            heads: 8,
            blocks: 4,
            discrete_blocks: 2,
            ff_mult: 2,
            timestep_encoding: TimestepEncoding::Scalar,
        }
    }
}

impl DenoiserConfig {
    /// Validates the hyper-parameter combination.
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 {
            return Err(ModelError::Config("d_model must be positive".into()));
        }
        if self.heads == 0 {
            return Err(ModelError::Config("heads must be positive".into()));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(ModelError::Config(format!(
                "d_model ({}) must be divisible by heads ({})",
                self.d_model, self.heads
            )));
        }
        if self.blocks == 0 {
            return Err(ModelError::Config("blocks must be at least 1".into()));
        }
        if self.discrete_blocks == 0 {
            return Err(ModelError::Config(
                "discrete_blocks must be at least 1".into(),
            ));
        }
        if self.ff_mult == 0 {
            return Err(ModelError::Config("ff_mult must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let config = DenoiserConfig::default();
        assert!(config.validate().is_ok());
        assert_eq!(config.d_model, 512);
        assert_eq!(config.heads, 8);
        assert_eq!(config.blocks, 4);
        assert_eq!(config.discrete_blocks, 2);
    }

    #[test]
    fn indivisible_head_count_is_rejected() {
        let config = DenoiserConfig {
            d_model: 10,
            heads: 3,
            ..DenoiserConfig::default()
        };
        assert!(matches!(config.validate(), Err(ModelError::Config(_))));
    }

    #[test]
    fn zero_blocks_are_rejected() {
        let config = DenoiserConfig {
            blocks: 0,
            ..DenoiserConfig::default()
        };
        assert!(matches!(config.validate(), Err(ModelError::Config(_))));
        let config = DenoiserConfig {
            discrete_blocks: 0,
            ..DenoiserConfig::default()
        };
        assert!(matches!(config.validate(), Err(ModelError::Config(_))));
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = DenoiserConfig {
            d_model: 64,
            heads: 4,
            blocks: 2,
            discrete_blocks: 1,
            ff_mult: 3,
            timestep_encoding: TimestepEncoding::Sinusoidal,
        };
        let text = serde_json::to_string(&config).unwrap();
        let back: DenoiserConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }
}
