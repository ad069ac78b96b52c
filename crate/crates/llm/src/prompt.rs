//! Staged prompt assembly.
//!
//! A prompt has three sections in fixed order — initialization (role, task,
//! output format), chain of thought (reasoning instructions), and generation
//! (worked examples plus the user request). The four variants P1..P4 grow
//! cumulatively: each section of a lower variant is a prefix of the same
//! section in every higher variant.
//!
//! - P1: task definition and a neutral answer instruction only.
//! - P2: P1 plus the common-sense design-knowledge paragraph.
//! - P3: P2 plus the literal step-by-step trigger line.
//! - P4: P3 plus the predefined reasoning chain (room selection → sizing →
//!   positioning).

use crate::client::Message;
use crate::{LlmError, Result};
use floorgen_core::init::LayoutInit;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const INITIALIZATION: &str = include_str!("../templates/initialization.txt");
const COMMON_SENSE: &str = include_str!("../templates/common_sense.txt");
const COT_DIRECT: &str = include_str!("../templates/cot_direct.txt");
const COT_STEP: &str = include_str!("../templates/cot_step.txt");
const COT_CHAIN: &str = include_str!("../templates/cot_chain.txt");
const GENERATION: &str = include_str!("../templates/generation.txt");
const DEMOS_JSON: &str = include_str!("../demos.json");

/// Prompt staging variant, ordered from barest to fullest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    P1,
    P2,
    P3,
    P4,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::P1 => "P1",
            Variant::P2 => "P2",
            Variant::P3 => "P3",
            Variant::P4 => "P4",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Variant, String> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(Variant::P1),
            "P2" => Ok(Variant::P2),
            "P3" => Ok(Variant::P3),
            "P4" => Ok(Variant::P4),
            other => Err(format!("unknown prompt variant {other:?}, expected P1..P4")),
        }
    }
}

/// One worked example: a request text and the layout that answers it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoPair {
    pub description: String,
    pub layout_init: LayoutInit,
}

/// The assembled prompt. Sections concatenate in the order initialization →
/// chain of thought → generation; all three are always non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub initialization: String,
    pub chain_of_thought: String,
    pub generation: String,
    pub demos: Vec<DemoPair>,
}

impl PromptBundle {
    /// Full prompt text in the fixed section order.
    pub fn concatenated(&self) -> String {
        format!(
            "{}\n\n{}\n\n{}",
            self.initialization, self.chain_of_thought, self.generation
        )
    }

    /// Chat-message form: the instruction sections become the system message,
    /// the generation section (examples + request) becomes the user message.
    pub fn to_messages(&self) -> Vec<Message> {
        vec![
            Message::system(format!(
                "{}\n\n{}",
                self.initialization, self.chain_of_thought
            )),
            Message::user(self.generation.clone()),
        ]
    }
}

/// The eight in-repo worked examples (5–8 rooms), parsed from `demos.json`.
pub fn builtin_demos() -> Vec<DemoPair> {
    serde_json::from_str(DEMOS_JSON).expect("bundled demos.json is valid")
}

fn render_demos(demos: &[DemoPair]) -> String {
    if demos.is_empty() {
        return "(no examples provided)".to_string();
    }
    demos
        .iter()
        .enumerate()
        .map(|(i, d)| {
            format!(
                "Example {}:\nRequest: {}\nLayout:\n{}",
                i + 1,
                d.description,
                d.layout_init.to_json_pretty()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Assembles the prompt for `variant` around `user_text`, embedding `demos`
/// into the generation section. Deterministic for fixed inputs.
pub fn build_prompt(demos: &[DemoPair], user_text: &str, variant: Variant) -> Result<PromptBundle> {
    if user_text.trim().is_empty() {
        return Err(LlmError::EmptyInput);
    }
    if variant >= Variant::P3 && demos.is_empty() {
        return Err(LlmError::MissingDemos { variant });
    }

    let mut initialization = INITIALIZATION.trim_end().to_string();
    if variant >= Variant::P2 {
        initialization.push_str("\n\n");
        initialization.push_str(COMMON_SENSE.trim_end());
    }

    let mut chain_of_thought = COT_DIRECT.trim_end().to_string();
    if variant >= Variant::P3 {
        chain_of_thought.push_str("\n\n");
        chain_of_thought.push_str(COT_STEP.trim_end());
    }
    if variant >= Variant::P4 {
        chain_of_thought.push_str("\n\n");
        chain_of_thought.push_str(COT_CHAIN.trim_end());
    }

    let generation = GENERATION
        .trim_end()
        .replace("{DEMOS}", &render_demos(demos))
        .replace("{USER_TEXT}", user_text.trim());

    Ok(PromptBundle {
        initialization,
        chain_of_thought,
        generation,
        demos: demos.to_vec(),
    })
}
