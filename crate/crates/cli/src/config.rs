//! TOML configuration with complete defaults.
//!
//! Every section deserializes with unknown keys rejected and every field
//! defaulted, so an empty file (or no file at all) is a full, valid
//! configuration and any present key overrides exactly one knob. The
//! denoiser and training sections reuse the library config types verbatim;
//! the diffusion section stores the schedule as (kind, t_max) and builds the
//! resolved schedule on demand.

use crate::{CliError, Result};
use floorgen_diffusion::{make_schedule, DiffusionConfig, ScheduleKind, TrainConfig};
use floorgen_metrics::EvalConfig;
use floorgen_model::DenoiserConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Where commands read and write artifacts by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Plan corpus file or directory of `*.jsonl`.
    pub corpus: PathBuf,
    /// Denoiser checkpoint (optimizer state lives next to it).
    pub checkpoint: PathBuf,
    /// Offline client fixture directory.
    pub fixtures: PathBuf,
    /// Directory for generated files.
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> PathsConfig {
        PathsConfig {
            corpus: PathBuf::from("corpus"),
            checkpoint: PathBuf::from("out/denoiser.ckpt"),
            fixtures: PathBuf::from("fixtures"),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Diffusion process knobs; `build` resolves them into a [`DiffusionConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    pub schedule: ScheduleKind,
    pub t_max: usize,
    pub cond_rate: f64,
    pub forward_cond: bool,
    pub reverse_cond: bool,
    /// Timesteps strictly below this run the discrete decode branch;
    /// absent → `t_max / 32`, at least 1.
    pub t_discrete: Option<usize>,
    pub sample_stride: usize,
    pub stochastic_sampling: bool,
}

impl Default for DiffusionSection {
    fn default() -> DiffusionSection {
        DiffusionSection {
            schedule: ScheduleKind::default(),
            t_max: 64,
            cond_rate: 1e-1,
            forward_cond: true,
            reverse_cond: true,
            t_discrete: None,
            sample_stride: 1,
            stochastic_sampling: false,
        }
    }
}

impl DiffusionSection {
    pub fn build(&self) -> Result<DiffusionConfig> {
        let schedule = make_schedule(self.t_max, self.schedule)?;
        let mut cfg = DiffusionConfig::new(schedule);
        cfg.cond_rate = self.cond_rate;
        cfg.forward_cond = self.forward_cond;
        cfg.reverse_cond = self.reverse_cond;
        if let Some(t) = self.t_discrete {
            cfg.t_discrete = t;
        }
        cfg.sample_stride = self.sample_stride;
        cfg.stochastic_sampling = self.stochastic_sampling;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Language-frontend knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmSection {
    /// Extra generation attempts after the first failed parse.
    pub max_retries: usize,
}

impl Default for LlmSection {
    fn default() -> LlmSection {
        LlmSection { max_retries: 2 }
    }
}

/// Rendering knobs; the palette is the 25 room-type fill colors in type-id
/// order, as `#rrggbb` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    /// SVG canvas edge (the viewBox is `0 0 canvas canvas`) and PNG edge.
    pub canvas: u32,
    /// Room outline width in canvas units.
    pub stroke_width: f64,
    /// Label height in canvas units.
    pub font_size: f64,
    pub palette: Vec<String>,
}

impl Default for RenderSection {
    fn default() -> RenderSection {
        RenderSection {
            canvas: 512,
            stroke_width: 2.0,
            font_size: 12.0,
            palette: crate::render::DEFAULT_PALETTE.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Metric knobs; mirrors the evaluation library's config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub iou_resolution: usize,
    pub adjacency_eps: f64,
    pub feature_resolution: usize,
    pub feature_seed: u64,
}

impl Default for EvalSection {
    fn default() -> EvalSection {
        let base = EvalConfig::default();
        EvalSection {
            iou_resolution: base.iou_resolution,
            adjacency_eps: base.adjacency_eps,
            feature_resolution: base.feature_resolution,
            feature_seed: base.feature_seed,
        }
    }
}

impl EvalSection {
    pub fn build(&self) -> EvalConfig {
        EvalConfig {
            iou_resolution: self.iou_resolution,
            adjacency_eps: self.adjacency_eps,
            feature_resolution: self.feature_resolution,
            feature_seed: self.feature_seed,
        }
    }
}

/// The whole configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub paths: PathsConfig,
    pub diffusion: DiffusionSection,
    pub denoiser: DenoiserConfig,
    pub train: TrainConfig,
    pub llm: LlmSection,
    pub render: RenderSection,
    pub eval: EvalSection,
}

impl CliConfig {
    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<CliConfig> {
        let config = match path {
            None => CliConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    /// Cross-field checks beyond what serde enforces.
    pub fn validate(&self) -> Result<()> {
        self.denoiser.validate().map_err(|e| CliError::Usage(format!("denoiser: {e}")))?;
        self.train.validate().map_err(|e| CliError::Usage(format!("train: {e}")))?;
        self.diffusion.build()?;
        if self.render.palette.len() != crate::render::DEFAULT_PALETTE.len() {
            return Err(CliError::Usage(format!(
                "render.palette must list {} colors, got {}",
                crate::render::DEFAULT_PALETTE.len(),
                self.render.palette.len()
            )));
        }
        for color in &self.render.palette {
            crate::render::parse_color(color)
                .ok_or_else(|| CliError::Usage(format!("bad palette color {color:?}")))?;
        }
        if self.render.canvas == 0 {
            return Err(CliError::Usage("render.canvas must be positive".to_string()));
        }
        Ok(())
    }
}
