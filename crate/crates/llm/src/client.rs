//! Chat clients: the [`LlmClient`] trait, an offline [`MockClient`] that
//! replays fixture files, and a [`LiveClient`] speaking the common
//! chat-completions HTTP shape.
//!
//! Environment variables (all optional):
//! - `FLOORGEN_LLM_ENDPOINT` — chat-completions URL; unset selects the mock.
//! - `FLOORGEN_LLM_API_KEY` — bearer token for the live endpoint.
//! - `FLOORGEN_LLM_MODEL` — model name sent to the live endpoint.
//! - `FLOORGEN_LLM_TEMPERATURE` — sampling temperature (default 0).
//! - `FLOORGEN_LLM_FIXTURES` — fixtures directory for the mock (default
//!   `fixtures`).

use crate::{LlmError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

/// Chat role of one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Message {
        Message { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Message {
        Message { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Message {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// A chat completion backend. Implementations must be safe to share across
/// threads; endpoint, model, and temperature are configuration details opaque
/// to callers.
pub trait LlmClient: Send + Sync {
    /// Sends the ordered message list and returns the assistant reply text.
    fn complete(&self, messages: &[Message]) -> Result<String>;
}

/// Offline client replaying canned replies from a fixtures directory.
///
/// The fixture for a request is the file `<dir>/<key>.txt` where `key` is
/// [`MockClient::fixture_key`] of the message list, so a given conversation
/// state always maps to the same file. Missing fixtures are client errors.
/// Safe for concurrent use.
#[derive(Debug)]
pub struct MockClient {
    dir: PathBuf,
    calls: AtomicUsize,
}

impl MockClient {
    pub fn new(dir: impl Into<PathBuf>) -> MockClient {
        MockClient { dir: dir.into(), calls: AtomicUsize::new(0) }
    }

    /// Deterministic content hash of a message list: the first 16 hex digits
    /// of the SHA-256 of its canonical JSON serialization.
    pub fn fixture_key(messages: &[Message]) -> String {
        let canonical =
            serde_json::to_string(messages).expect("message serialization cannot fail");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Path of the fixture file that [`complete`](LlmClient::complete) would
    /// read for this message list.
    pub fn fixture_path(&self, messages: &[Message]) -> PathBuf {
        self.dir.join(format!("{}.txt", Self::fixture_key(messages)))
    }

    /// Writes `reply` as the fixture for `messages` and returns its path.
    pub fn record_fixture(&self, messages: &[Message], reply: &str) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.fixture_path(messages);
        std::fs::write(&path, reply)?;
        Ok(path)
    }

    /// Number of `complete` calls made so far on this instance.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LlmClient for MockClient {
    fn complete(&self, messages: &[Message]) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let path = self.fixture_path(messages);
        std::fs::read_to_string(&path).map_err(|e| {
            LlmError::Client(format!("missing fixture {}: {e}", path.display()))
        })
    }
}

/// HTTP client for a chat-completions endpoint (OpenAI-compatible shape).
#[derive(Debug, Clone)]
pub struct LiveClient {
    endpoint: String,
    api_key: String,
    model: String,
    temperature: f64,
    agent: ureq::Agent,
}

impl LiveClient {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
        temperature: f64,
    ) -> LiveClient {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(120))
            .build();
        LiveClient {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            model: model.into(),
            temperature,
            agent,
        }
    }

    /// Builds a live client from the environment, or `None` when no endpoint
    /// is configured.
    pub fn from_env() -> Option<LiveClient> {
        let endpoint = std::env::var("FLOORGEN_LLM_ENDPOINT").ok()?;
        let api_key = std::env::var("FLOORGEN_LLM_API_KEY").unwrap_or_default();
        let model = std::env::var("FLOORGEN_LLM_MODEL").unwrap_or_else(|_| "gpt-4o".to_string());
        let temperature = std::env::var("FLOORGEN_LLM_TEMPERATURE")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0.0);
        Some(LiveClient::new(endpoint, api_key, model, temperature))
    }
}

impl LlmClient for LiveClient {
    fn complete(&self, messages: &[Message]) -> Result<String> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": messages,
        });
        let mut request = self.agent.post(&self.endpoint);
        if !self.api_key.is_empty() {
            request = request.set("Authorization", &format!("Bearer {}", self.api_key));
        }
        let reply: serde_json::Value = request
            .send_json(body)
            .map_err(|e| LlmError::Client(format!("request to {} failed: {e}", self.endpoint)))?
            .into_json()
            .map_err(|e| LlmError::Client(format!("malformed response body: {e}")))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                LlmError::Client("response carries no choices[0].message.content".to_string())
            })
    }
}

/// Selects a client from the environment: a [`LiveClient`] when
/// `FLOORGEN_LLM_ENDPOINT` is set, otherwise a [`MockClient`] on the
/// `FLOORGEN_LLM_FIXTURES` directory (default `fixtures`).
pub fn client_from_env() -> Box<dyn LlmClient> {
    if let Some(live) = LiveClient::from_env() {
        return Box::new(live);
    }
    let dir =
        std::env::var("FLOORGEN_LLM_FIXTURES").unwrap_or_else(|_| "fixtures".to_string());
    Box::new(MockClient::new(dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_messages() -> Vec<Message> {
        vec![
            Message::system("You are a designer."),
            Message::user("One bedroom."),
        ]
    }

    #[test]
    fn fixture_key_is_stable_and_content_sensitive() {
        let m = sample_messages();
        let k1 = MockClient::fixture_key(&m);
        let k2 = MockClient::fixture_key(&m);
        assert_eq!(k1, k2);
        assert_eq!(k1.len(), 16);
        assert!(k1.chars().all(|c| c.is_ascii_hexdigit()));

        let mut other = m.clone();
        other[1].content.push('!');
        assert_ne!(k1, MockClient::fixture_key(&other));

        // Role matters too.
        let mut swapped = m.clone();
        swapped[1].role = Role::Assistant;
        assert_ne!(k1, MockClient::fixture_key(&swapped));
    }

    #[test]
    fn mock_replays_fixture_and_counts_calls() {
        let dir = tempfile::tempdir().unwrap();
        let client = MockClient::new(dir.path());
        let m = sample_messages();
        client.record_fixture(&m, "canned reply").unwrap();
        assert_eq!(client.call_count(), 0);
        assert_eq!(client.complete(&m).unwrap(), "canned reply");
        assert_eq!(client.complete(&m).unwrap(), "canned reply");
        assert_eq!(client.call_count(), 2);
    }

    #[test]
    fn missing_fixture_is_a_client_error_but_still_counts() {
        let dir = tempfile::tempdir().unwrap();
        let client = MockClient::new(dir.path());
        let err = client.complete(&sample_messages()).unwrap_err();
        assert!(matches!(err, LlmError::Client(_)));
        assert_eq!(client.call_count(), 1);
    }

    #[test]
    fn message_serialization_shape_is_the_wire_contract() {
        let m = Message::user("hi");
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"role":"user","content":"hi"}"#
        );
    }
}
