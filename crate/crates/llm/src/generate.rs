//! End-to-end layout generation: fullest prompt variant, client call, parse,
//! and error-driven re-prompting.

use crate::client::{LlmClient, Message};
use crate::parse::parse_layout_init;
use crate::prompt::{build_prompt, DemoPair, Variant};
use crate::{LlmError, Result};
use floorgen_core::init::LayoutInit;

/// Generates a validated layout for `user_text` using the staged P4 prompt.
///
/// Parse failures re-prompt with the failed reply and its error appended, so
/// the model can correct itself; client failures retry the same request.
/// `max_retries` counts the extra attempts after the first, so at most
/// `max_retries + 1` client calls are made. Returns the layout together with
/// the repair log of the successful parse.
pub fn generate_layout_init(
    user_text: &str,
    demos: &[DemoPair],
    client: &dyn LlmClient,
    max_retries: usize,
) -> Result<(LayoutInit, Vec<String>)> {
    let bundle = build_prompt(demos, user_text, Variant::P4)?;
    let mut messages = bundle.to_messages();
    let attempts = max_retries + 1;
    let mut last = LlmError::Client("no attempt made".to_string());

    for attempt in 1..=attempts {
        match client.complete(&messages) {
            Err(e) => {
                log::warn!("generation attempt {attempt}/{attempts}: client error: {e}");
                last = e;
            }
            Ok(raw) => match parse_layout_init(&raw) {
                Ok(parsed) => return Ok(parsed),
                Err(e) => {
                    log::warn!("generation attempt {attempt}/{attempts}: parse error: {e}");
                    messages.push(Message::assistant(raw));
                    messages.push(Message::user(format!(
                        "Your previous reply could not be used: {e}. Reply again with \
                         exactly one JSON object matching the required schema."
                    )));
                    last = e;
                }
            },
        }
    }

    Err(LlmError::GenerationFailed { attempts, last: Box::new(last) })
}
