//! Command-line front end for the text-to-floorplan pipeline.
//!
//! One binary, eight subcommands:
//!
//! | command    | role                                                          |
//! |------------|---------------------------------------------------------------|
//! | `init`     | text → coarse layout JSON (+ SVG preview) via the language model |
//! | `describe` | floorplan file → natural-language description                 |
//! | `train`    | paired corpus → denoiser checkpoint (resumable)               |
//! | `sample`   | checkpoint + layout → refined floorplans                      |
//! | `eval`     | prediction dir vs. target dir → metric report                 |
//! | `ablate`   | conditioning / rate sweep → result tables                     |
//! | `synth`    | procedural corpus generator                                   |
//! | `render`   | floorplan file → SVG (optional PNG)                           |
//!
//! Every command is deterministic given `--seed`, reads its knobs from one
//! TOML file (`--config`), and refuses to overwrite existing outputs unless
//! `--force` is passed. Exit codes: 0 success, 2 usage error, 3 language
//! model failure, 4 training divergence, 5 missing artifact.

use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod render;

/// CLI failure modes, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("language model failure: {0}")]
    Llm(#[from] floorgen_llm::LlmError),
    #[error("training diverged: loss stayed non-finite for {steps} consecutive steps")]
    Diverged { steps: usize },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("all ablation rows failed; first error: {0}")]
    AblationFailed(String),
    #[error(transparent)]
    Core(#[from] floorgen_core::CoreError),
    #[error(transparent)]
    Data(#[from] floorgen_data::DataError),
    #[error(transparent)]
    Metrics(#[from] floorgen_metrics::MetricsError),
    #[error(transparent)]
    Model(#[from] floorgen_model::ModelError),
    #[error(transparent)]
    Diffusion(floorgen_diffusion::DiffusionError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("image encoding failure: {0}")]
    Image(#[from] image::ImageError),
}

impl From<floorgen_diffusion::DiffusionError> for CliError {
    fn from(err: floorgen_diffusion::DiffusionError) -> CliError {
        match err {
            floorgen_diffusion::DiffusionError::Diverged { steps } => CliError::Diverged { steps },
            other => CliError::Diffusion(other),
        }
    }
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Llm(_) => 3,
            CliError::Diverged { .. } => 4,
            CliError::MissingArtifact(_) => 5,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Text-to-floorplan pipeline: coarse layouts from a language model,
/// refined by conditional diffusion.
#[derive(Debug, Parser)]
#[command(name = "floorgen", version, about)]
pub struct Cli {
    /// TOML config file (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master random seed; overrides the config's training seed and drives
    /// every stochastic step.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Overwrite existing outputs instead of leaving them in place.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a coarse layout from a text description.
    Init {
        /// Natural-language description of the desired home.
        #[arg(long)]
        text: String,
        /// Output directory (default: the config's out_dir).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Describe an existing floorplan in natural language.
    Describe {
        /// Floorplan file (first JSON line is used).
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Use the deterministic template instead of the language model.
        #[arg(long)]
        template: bool,
        /// Write the description here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Train the denoiser on a paired corpus.
    Train {
        /// Paired corpus (JSONL file or directory of *.jsonl).
        #[arg(long, value_name = "PATH")]
        pairs: PathBuf,
    },
    /// Refine a coarse layout into floorplans with a trained denoiser.
    Sample {
        /// Coarse layout JSON file; skips the language model.
        #[arg(long, value_name = "FILE")]
        init: Option<PathBuf>,
        /// Text description; runs the language model first.
        #[arg(long, conflicts_with = "init")]
        text: Option<String>,
        /// Number of samples to draw (distinct seeds, distinct files).
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output directory (default: the config's out_dir).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Score predictions against targets, paired by filename.
    Eval {
        /// Directory of predicted floorplan files.
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        /// Directory of target floorplan files.
        #[arg(long, value_name = "DIR")]
        target: PathBuf,
        /// Report file (default: out_dir/report.txt).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the conditioning and rate sweeps on a synthetic corpus.
    Ablate {
        /// Training-set size for each run.
        #[arg(long, default_value_t = 24)]
        train_count: usize,
        /// Held-out evaluation pairs.
        #[arg(long, default_value_t = 8)]
        eval_count: usize,
        /// Rooms per synthetic plan.
        #[arg(long, default_value_t = 6)]
        rooms: usize,
        /// Output directory for the result tables.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus (optionally paired with coarse layouts).
    Synth {
        /// Number of plans to generate.
        #[arg(long, default_value_t = 16)]
        count: usize,
        /// Rooms per plan.
        #[arg(long, default_value_t = 6)]
        rooms: usize,
        /// Pair each plan with a jittered coarse layout (Chebyshev radius).
        #[arg(long, value_name = "INT")]
        jitter: Option<u8>,
        /// Output JSONL file (default: out_dir/synth.jsonl).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Render a floorplan file to SVG (and optionally PNG).
    Render {
        /// Floorplan file (first JSON line is used).
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Output SVG path (default: input with .svg extension).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Also write a PNG raster next to the SVG.
        #[arg(long)]
        png: bool,
    },
}

/// Loads the config and dispatches to the subcommand implementations.
pub fn run(cli: Cli) -> Result<()> {
    let mut config = config::CliConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.train.seed = seed;
    }
    let seed = config.train.seed;
    let force = cli.force;
    match cli.command {
        Command::Init { text, out } => {
            commands::cmd_init(&config, &text, out.as_deref(), force).map(|_| ())
        }
        Command::Describe { input, template, out } => {
            commands::cmd_describe(&config, &input, template, out.as_deref(), force).map(|_| ())
        }
        Command::Train { pairs } => commands::cmd_train(&config, &pairs, force).map(|_| ()),
        Command::Sample { init, text, count, out } => {
            let source = match (init, text) {
                (Some(path), None) => commands::InitSource::File(path),
                (None, Some(text)) => commands::InitSource::Text(text),
                (None, None) => {
                    return Err(CliError::Usage("pass --init or --text".into()));
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with enforces exclusivity"),
            };
            commands::cmd_sample(&config, source, count, out.as_deref(), seed, force).map(|_| ())
        }
        Command::Eval { pred, target, out } => {
            commands::cmd_eval(&config, &pred, &target, out.as_deref(), force).map(|_| ())
        }
        Command::Ablate { train_count, eval_count, rooms, out } => commands::cmd_ablate(
            &config,
            train_count,
            eval_count,
            rooms,
            out.as_deref(),
            seed,
            force,
        )
        .map(|_| ()),
        Command::Synth { count, rooms, jitter, out } => {
            commands::cmd_synth(&config, count, rooms, jitter, out.as_deref(), seed, force)
                .map(|_| ())
        }
        Command::Render { input, out, png } => {
            commands::cmd_render(&config, &input, out.as_deref(), png, force).map(|_| ())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_documented_table() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        let llm = floorgen_llm::LlmError::Client("down".into());
        assert_eq!(CliError::from(llm).exit_code(), 3);
        assert_eq!(CliError::Diverged { steps: 9 }.exit_code(), 4);
        assert_eq!(CliError::MissingArtifact("ckpt".into()).exit_code(), 5);
        assert_eq!(
            CliError::Io(std::io::Error::other("disk")).exit_code(),
            1
        );
    }

    #[test]
    fn divergence_maps_to_its_own_variant() {
        let err = floorgen_diffusion::DiffusionError::Diverged { steps: 25 };
        assert!(matches!(CliError::from(err), CliError::Diverged { steps: 25 }));
        let other = floorgen_diffusion::DiffusionError::Config("bad".into());
        assert_eq!(CliError::from(other).exit_code(), 1);
    }

    #[test]
    fn parser_accepts_global_flags_anywhere() {
        let cli = Cli::try_parse_from([
            "floorgen", "synth", "--count", "3", "--seed", "7", "--force",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(7));
        assert!(cli.force);
        assert!(matches!(cli.command, Command::Synth { count: 3, .. }));
    }

    #[test]
    fn sample_requires_an_init_source() {
        let cli = Cli::try_parse_from(["floorgen", "sample"]).unwrap();
        let err = run(cli).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sample_rejects_both_sources() {
        let parsed = Cli::try_parse_from([
            "floorgen", "sample", "--init", "a.json", "--text", "two rooms",
        ]);
        assert!(parsed.is_err(), "conflicting flags must fail to parse");
    }
}
