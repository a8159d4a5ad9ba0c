//! Agent backends: live HTTP chat models, scripted replays, and the
//! synthetic conformity model.
//!
//! The engine opens one [`AgentSession`] per (agent, question) and calls it
//! once per round, so sessions may hold per-debate state (the synthetic
//! RNG). Calls within one debate are strictly sequential; providers must be
//! shareable across debates running on different threads.

mod scripted;
mod synthetic;

#[cfg(feature = "http")]
mod http;

pub use scripted::{ReplayFixtures, ScriptedSession};
pub use synthetic::{synthetic_step, SyntheticParams, SyntheticSession, SyntheticState};

#[cfg(feature = "http")]
pub use http::{HttpBackend, HttpSession, LiveProvider, RetryPolicy, API_KEY_ENV};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::Answer;
use crate::types::{AgentSpec, BackendKind, GenerationParams, Question};

/// Chat roles on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One turn of an agent's conversation history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(
        "agent {agent_id} round {round}: transport failure after {attempts} attempts: {detail}"
    )]
    Transport {
        agent_id: String,
        round: u32,
        attempts: u32,
        detail: String,
    },
    #[error("agent {agent_id} round {round}: HTTP status {status}: {detail}")]
    HttpStatus {
        agent_id: String,
        round: u32,
        status: u16,
        detail: String,
    },
    #[error("agent {agent_id} round {round}: malformed completion response: {detail}")]
    MalformedResponse {
        agent_id: String,
        round: u32,
        detail: String,
    },
    #[error("agent {agent_id} round {round}: fixture exhausted")]
    FixtureExhausted { agent_id: String, round: u32 },
    #[error("agent {agent_id}: no fixture entry for question {question_id}")]
    FixtureMissing {
        agent_id: String,
        question_id: String,
    },
    #[error("agent {agent_id}: backend {kind} is not available in this provider")]
    UnsupportedBackend {
        agent_id: String,
        kind: &'static str,
    },
    #[error("missing API key: set {0}")]
    MissingApiKey(&'static str),
}

/// Everything a backend may condition on for one generation call.
pub struct GenerationContext<'a> {
    pub agent: &'a AgentSpec,
    /// Full conversation so far, ending with the user message to answer.
    pub history: &'a [ChatMessage],
    pub params: &'a GenerationParams,
    pub question: &'a Question,
    /// 1-based round index.
    pub round: u32,
    /// Peers' previous-round extracted answers in roster order (self
    /// excluded); empty at round 1.
    pub peer_answers: &'a [Answer],
}

/// A stateful per-(agent, question) generation handle.
pub trait AgentSession {
    /// Produces the agent's next assistant message.
    fn generate(&mut self, ctx: &GenerationContext<'_>) -> Result<String, AgentError>;

    /// Condenses one peer response for an over-budget debate context.
    /// `rendered_prompt` is the summarize template with `{RESPONSE}`
    /// substituted; offline backends that cannot run it fall back to
    /// deterministic tail truncation of `source_text`.
    fn summarize(&mut self, source_text: &str, rendered_prompt: &str)
        -> Result<String, AgentError>;
}

/// Opens sessions for the agents of a roster.
pub trait SessionProvider: Sync {
    fn open<'a>(
        &'a self,
        spec: &AgentSpec,
        question: &Question,
        agent_seed: u64,
    ) -> Result<Box<dyn AgentSession + 'a>, AgentError>;
}

/// Backend-neutral word-level tail truncation used by offline summaries:
/// keeps the final `max_words` words so the trailing answer marker survives.
pub(crate) fn tail_words(text: &str, max_words: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= max_words {
        return text.to_string();
    }
    let mut out = String::from("(condensed) ...");
    for w in &words[words.len() - max_words..] {
        out.push(' ');
        out.push_str(w);
    }
    out
}

/// Provider for deterministic offline backends (synthetic + scripted).
/// Opening an `http_chat` agent fails with `UnsupportedBackend`.
pub struct OfflineProvider {
    fixtures: std::collections::BTreeMap<String, ReplayFixtures>,
}

impl OfflineProvider {
    pub fn new() -> Self {
        Self {
            fixtures: Default::default(),
        }
    }

    /// Registers a fixture file's contents under its reference name.
    pub fn with_fixtures(
        mut self,
        fixture_ref: impl Into<String>,
        fixtures: ReplayFixtures,
    ) -> Self {
        self.fixtures.insert(fixture_ref.into(), fixtures);
        self
    }

    pub fn fixtures(&self, fixture_ref: &str) -> Option<&ReplayFixtures> {
        self.fixtures.get(fixture_ref)
    }
}

impl Default for OfflineProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl SessionProvider for OfflineProvider {
    fn open<'a>(
        &'a self,
        spec: &AgentSpec,
        question: &Question,
        agent_seed: u64,
    ) -> Result<Box<dyn AgentSession + 'a>, AgentError> {
        match &spec.backend {
            BackendKind::Synthetic {
                p_correct,
                sycophancy,
                revise_prob,
            } => Ok(Box::new(SyntheticSession::new(
                SyntheticParams {
                    p_correct: *p_correct,
                    sycophancy: *sycophancy,
                    revise_prob: *revise_prob,
                },
                agent_seed,
            ))),
            BackendKind::Scripted { fixture } => {
                let fixtures =
                    self.fixtures
                        .get(fixture)
                        .ok_or_else(|| AgentError::FixtureMissing {
                            agent_id: spec.agent_id.clone(),
                            question_id: format!("<fixture file {fixture} not loaded>"),
                        })?;
                let lines = fixtures
                    .responses(&question.id, &spec.agent_id)
                    .ok_or_else(|| AgentError::FixtureMissing {
                        agent_id: spec.agent_id.clone(),
                        question_id: question.id.clone(),
                    })?;
                Ok(Box::new(ScriptedSession::new(spec.agent_id.clone(), lines)))
            }
            BackendKind::HttpChat { .. } => Err(AgentError::UnsupportedBackend {
                agent_id: spec.agent_id.clone(),
                kind: "http_chat",
            }),
        }
    }
}
