//! Bundling plans into training pairs.
//!
//! Two ways to obtain the layout condition for a plan:
//!
//! * **Perturb** — jitter the plan's own room boxes ([`crate::perturb`]); no
//!   description, fully offline, the default for training runs.
//! * **Llm** — describe the plan with the language frontend, then generate a
//!   fresh layout from that description, mirroring how a user request flows
//!   through the system. Any failure along that chain (client, parsing,
//!   validation, alignment) falls back to perturbation when a fallback
//!   jitter is configured, otherwise the error propagates. A fallback keeps
//!   the description when the describe step succeeded — it still describes
//!   the target — and drops only the failed layout.
//!
//! Plan `i` derives its own jitter seed from the caller's seed and `i`, so a
//! pair never depends on how many plans are in the batch.

use crate::perturb::perturb_to_init;
use crate::{DataError, Result, Sample};
use floorgen_core::types::Floorplan;
use floorgen_llm::{describe_layout, generate_layout_init, DemoPair, LlmClient};

/// Odd 64-bit mix for per-plan seed derivation.
const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// How [`build_pairs`] obtains each plan's layout condition.
pub enum PairMode<'a> {
    /// Jitter the plan's own room boxes by up to `jitter` units.
    Perturb { jitter: u8 },
    /// Describe each plan, then generate a layout from the description.
    Llm {
        client: &'a dyn LlmClient,
        demos: &'a [DemoPair],
        /// Extra generation attempts after the first failed parse.
        max_retries: usize,
        /// Perturbation jitter to fall back to; `None` propagates failures.
        fallback_jitter: Option<u8>,
    },
}

/// Pairs plus an account of what the language path could not produce.
#[derive(Debug, Clone, Default)]
pub struct PairReport {
    pub samples: Vec<Sample>,
    /// Pairs that fell back to perturbation.
    pub fallback_count: usize,
    /// One entry per fallback or repaired generation.
    pub notes: Vec<String>,
}

fn plan_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(SEED_MIX)
}

/// The language path for one plan: describe, generate, validate as a pair.
/// On failure, returns the error together with the description when the
/// describe step had already succeeded, so a fallback can keep it.
fn llm_pair(
    plan: &Floorplan,
    client: &dyn LlmClient,
    demos: &[DemoPair],
    max_retries: usize,
) -> std::result::Result<(Sample, Vec<String>), (DataError, Option<String>)> {
    let description = match describe_layout(plan, client) {
        Ok(text) => text,
        Err(e) => return Err((e.into(), None)),
    };
    let (init, repairs) = match generate_layout_init(&description, demos, client, max_retries) {
        Ok(generated) => generated,
        Err(e) => return Err((e.into(), Some(description))),
    };
    match Sample::new(plan.clone(), init, Some(description.clone())) {
        Ok(sample) => Ok((sample, repairs)),
        Err(e) => Err((e, Some(description))),
    }
}

/// Builds one [`Sample`] per plan (see module docs).
pub fn build_pairs(plans: &[Floorplan], mode: PairMode, seed: u64) -> Result<PairReport> {
    if let PairMode::Llm { demos, .. } = &mode {
        if demos.is_empty() {
            return Err(DataError::Config(
                "language-model pair building needs at least one demo".to_string(),
            ));
        }
    }
    let mut report = PairReport::default();
    for (i, plan) in plans.iter().enumerate() {
        match &mode {
            PairMode::Perturb { jitter } => {
                let init = perturb_to_init(plan, *jitter, plan_seed(seed, i))?;
                report.samples.push(Sample::new(plan.clone(), init, None)?);
            }
            PairMode::Llm { client, demos, max_retries, fallback_jitter } => {
                match llm_pair(plan, *client, demos, *max_retries) {
                    Ok((sample, repairs)) => {
                        report
                            .notes
                            .extend(repairs.into_iter().map(|r| format!("plan {i}: {r}")));
                        report.samples.push(sample);
                    }
                    Err((e, description)) => {
                        let Some(jitter) = fallback_jitter else { return Err(e) };
                        let note = format!("plan {i}: fell back to perturbation: {e}");
                        log::warn!("{note}");
                        report.notes.push(note);
                        report.fallback_count += 1;
                        let init = perturb_to_init(plan, *jitter, plan_seed(seed, i))?;
                        report.samples.push(Sample::new(plan.clone(), init, description)?);
                    }
                }
            }
        }
    }
    Ok(report)
}
