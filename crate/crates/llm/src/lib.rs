//! Language frontend for the floorplan pipeline.
//!
//! Turns a free-form user request into a validated coarse layout
//! ([`LayoutInit`]) by assembling a staged prompt ([`build_prompt`]), calling
//! a pluggable chat client ([`LlmClient`]), and parsing the reply with
//! bounded, logged repairs ([`parse_layout_init`]). The reverse direction —
//! describing an existing plan in natural language for training-pair
//! construction — lives in [`describe_layout`] and its deterministic
//! no-client fallback [`template_description`].

pub mod client;
pub mod describe;
pub mod generate;
pub mod parse;
pub mod prompt;

pub use client::{client_from_env, LiveClient, LlmClient, Message, MockClient, Role};
pub use describe::{describe_layout, layout_facts, template_description};
pub use generate::generate_layout_init;
pub use parse::parse_layout_init;
pub use prompt::{builtin_demos, build_prompt, DemoPair, PromptBundle, Variant};

// The layout schema types live in the geometry crate so downstream stages can
// consume coarse layouts without linking the client stack; they are part of
// this crate's public surface.
pub use floorgen_core::init::{
    dedup_names, init_to_floorplan, map_room_name, Direction, InitRoom, LayoutInit,
};

/// Errors surfaced by the language frontend.
#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    /// The user request text is empty.
    #[error("user text is empty")]
    EmptyInput,
    /// A demo-dependent prompt variant was built without demos.
    #[error("prompt variant {variant} requires at least one demo")]
    MissingDemos { variant: prompt::Variant },
    /// No balanced JSON object could be extracted from the reply.
    #[error("no JSON object found in reply")]
    NoJson,
    /// The reply's JSON does not match the layout schema beyond repair.
    #[error("reply does not match the layout schema: {0}")]
    Schema(String),
    /// Transport / fixture failure from the client.
    #[error("client error: {0}")]
    Client(String),
    /// Every generation attempt failed; carries the last error.
    #[error("generation failed after {attempts} attempt(s): {last}")]
    GenerationFailed {
        attempts: usize,
        #[source]
        last: Box<LlmError>,
    },
    /// Geometry-level validation failure.
    #[error(transparent)]
    Core(#[from] floorgen_core::CoreError),
}

pub type Result<T> = std::result::Result<T, LlmError>;
