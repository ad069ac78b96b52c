//! Training-data supply for the floorplan pipeline.
//!
//! Four concerns live here, each in its own module:
//!
//! * [`corpus`] — reading and writing plan and pair records in the JSON-lines
//!   interchange format, skipping (and reporting) invalid lines.
//! * [`synth`] — a deterministic synthetic generator that tiles a fixed
//!   region into axis-aligned rooms, assigns types by a documented policy,
//!   and places one interior door per spanning-tree adjacency.
//! * [`perturb`] — deriving a coarse layout condition from a finished plan by
//!   jittering each room's bounding box; the language-model-free way to make
//!   training pairs.
//! * [`pairs`] / [`split`] — bundling plans with their layout conditions into
//!   [`Sample`]s (optionally via the language frontend, with perturbation as
//!   a fallback) and partitioning samples into train/test sets grouped by
//!   room count.
//!
//! Everything is deterministic per seed: batch work derives one RNG per item
//! from the caller's seed and the item's index, so outputs never depend on
//! iteration order or batch size.

pub mod corpus;
pub mod pairs;
pub mod perturb;
pub mod split;
pub mod synth;

pub use corpus::{
    load_corpus, read_pairs, sample_from_json_line, sample_to_json_line, write_pairs, LoadReport,
    PairsReport,
};
pub use pairs::{build_pairs, PairMode, PairReport};
pub use perturb::perturb_to_init;
pub use split::{split, SplitGroup, SplitReport, SplitSpec};
pub use synth::synth_generate;

use floorgen_core::align::align_condition;
use floorgen_core::init::LayoutInit;
use floorgen_core::types::Floorplan;

/// Errors surfaced by data generation and ingestion.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    /// Filesystem failure while reading or writing records.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The synthetic generator could not produce a valid plan.
    #[error("generation failed: {0}")]
    Gen(String),
    /// A record could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// Failure from the language frontend.
    #[error(transparent)]
    Llm(#[from] floorgen_llm::LlmError),
    /// Geometry-level validation failure.
    #[error(transparent)]
    Core(#[from] floorgen_core::CoreError),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// One training pair: a finished plan, the coarse layout it is conditioned
/// on, and (optionally) the natural-language brief the layout came from.
///
/// Construction enforces the pair contract: the condition passes schema
/// validation and can be aligned to the target, so downstream training code
/// never has to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub target: Floorplan,
    pub condition_init: LayoutInit,
    pub description: Option<String>,
}

impl Sample {
    /// Validates the pair and bundles it.
    ///
    /// Fails when either side fails its own validation or when the condition
    /// cannot be aligned to the target's token layout.
    pub fn new(
        target: Floorplan,
        condition_init: LayoutInit,
        description: Option<String>,
    ) -> Result<Sample> {
        condition_init.validate()?;
        align_condition(&target, &condition_init)?;
        Ok(Sample { target, condition_init, description })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use floorgen_core::init::InitRoom;
    use floorgen_core::types::{Corner, Loop, RoomType};

    fn rect_loop(room_type: RoomType, x: u8, y: u8, w: u8, h: u8) -> Loop {
        Loop::new(
            room_type,
            vec![
                Corner::new(x, y),
                Corner::new(x + w, y),
                Corner::new(x + w, y + h),
                Corner::new(x, y + h),
            ],
        )
    }

    fn two_room_plan() -> Floorplan {
        Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 8, 8, 120, 100),
            rect_loop(RoomType::Kitchen, 128, 8, 80, 100),
        ])
        .unwrap()
    }

    fn matching_init() -> LayoutInit {
        LayoutInit::new(vec![
            InitRoom {
                name: "living room".to_string(),
                style: "modern".to_string(),
                position: [10, 10],
                size: [118, 96],
                door: floorgen_core::init::Direction::Right,
            },
            InitRoom {
                name: "kitchen".to_string(),
                style: "modern".to_string(),
                position: [130, 10],
                size: [76, 96],
                door: floorgen_core::init::Direction::Left,
            },
        ])
        .unwrap()
    }

    #[test]
    fn sample_new_accepts_an_alignable_pair() {
        let sample =
            Sample::new(two_room_plan(), matching_init(), Some("a small flat".to_string()))
                .unwrap();
        assert_eq!(sample.target.rooms.len(), 2);
        assert_eq!(sample.condition_init.rooms.len(), 2);
        assert_eq!(sample.description.as_deref(), Some("a small flat"));
    }

    #[test]
    fn sample_new_rejects_an_invalid_condition() {
        let mut init = matching_init();
        init.rooms[0].size = [0, 96]; // zero width fails schema validation
        let err = Sample::new(two_room_plan(), init, None).unwrap_err();
        assert!(matches!(err, DataError::Core(_)), "got {err:?}");
    }
}
