//! Natural-language descriptions of existing plans, used to manufacture
//! (description, layout) training pairs.
//!
//! Both paths share one fact extractor: room counts and types plus adjacency
//! sentences read off the plan's room-adjacency graph. [`describe_layout`]
//! asks a client to phrase those facts; [`template_description`] phrases
//! them deterministically with no client at all.

use crate::client::{LlmClient, Message};
use crate::{LlmError, Result};
use floorgen_core::bubble::extract_bubble_graph;
use floorgen_core::types::Floorplan;
use std::collections::BTreeSet;

/// Geometric slack (grid units) when reading adjacency off the plan.
const ADJACENCY_EPS: f64 = 2.0;

/// Attempts per description request before giving up.
const ATTEMPTS: usize = 2;

fn with_article(phrase: &str) -> String {
    // "u" is skipped on purpose: "a utility room".
    match phrase.chars().next() {
        Some('a' | 'e' | 'i' | 'o') => format!("an {phrase}"),
        _ => format!("a {phrase}"),
    }
}

/// The facts a description must convey: one room-inventory sentence followed
/// by one sentence per adjacency (sorted, deduplicated).
pub fn layout_facts(plan: &Floorplan) -> Vec<String> {
    let phrases: Vec<String> = plan
        .room_loops()
        .map(|(_, lp)| with_article(&lp.room_type.phrase()))
        .collect();
    let inventory = match phrases.len() {
        1 => format!("This house has one room: {}.", phrases[0]),
        n => format!(
            "This house has {n} rooms: {} and {}.",
            phrases[..n - 1].join(", "),
            phrases[n - 1]
        ),
    };

    let graph = extract_bubble_graph(plan, ADJACENCY_EPS);
    let adjacency: BTreeSet<String> = graph
        .edges
        .iter()
        .map(|&(a, b)| {
            format!(
                "The {} is adjacent to the {}.",
                plan.rooms[a].room_type.phrase(),
                plan.rooms[b].room_type.phrase()
            )
        })
        .collect();

    std::iter::once(inventory).chain(adjacency).collect()
}

/// Deterministic no-client description: the facts joined into a paragraph.
pub fn template_description(plan: &Floorplan) -> String {
    layout_facts(plan).join(" ")
}

fn describe_messages(plan: &Floorplan) -> Vec<Message> {
    vec![
        Message::system(
            "You write short, natural briefs describing house floor plans for \
             clients. Mention every room and keep the stated adjacencies.",
        ),
        Message::user(format!(
            "Facts about the house:\n{}\n\nWrite one short paragraph describing \
             this house as a client would request it.",
            layout_facts(plan).join("\n")
        )),
    ]
}

/// Asks `client` to describe `plan`, retrying once on client failure.
/// Returns the reply verbatim.
pub fn describe_layout(plan: &Floorplan, client: &dyn LlmClient) -> Result<String> {
    plan.validate()?;
    let messages = describe_messages(plan);
    let mut last = LlmError::Client("no attempt made".to_string());
    for _ in 0..ATTEMPTS {
        match client.complete(&messages) {
            Ok(text) => return Ok(text),
            Err(e) => last = e,
        }
    }
    Err(LlmError::Client(format!(
        "description failed after {ATTEMPTS} attempts: {last}"
    )))
}
