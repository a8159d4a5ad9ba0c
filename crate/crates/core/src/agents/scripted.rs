//! Scripted replay backend: agents that return pre-recorded responses,
//! one per round, keyed by question and agent id.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{tail_words, AgentError, AgentSession, GenerationContext};

/// Fixture file contents: question id -> agent id -> per-round responses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplayFixtures {
    entries: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

impl ReplayFixtures {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn insert(
        &mut self,
        question_id: impl Into<String>,
        agent_id: impl Into<String>,
        responses: Vec<String>,
    ) {
        self.entries
            .entry(question_id.into())
            .or_default()
            .insert(agent_id.into(), responses);
    }

    pub fn responses(&self, question_id: &str, agent_id: &str) -> Option<Vec<String>> {
        self.entries.get(question_id)?.get(agent_id).cloned()
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }
}

/// Replays one agent's recorded lines. Calls are one per round in order;
/// running past the recorded lines fails loudly instead of fabricating text.
pub struct ScriptedSession {
    agent_id: String,
    lines: Vec<String>,
    consumed: usize,
}

impl ScriptedSession {
    pub fn new(agent_id: String, lines: Vec<String>) -> Self {
        Self {
            agent_id,
            lines,
            consumed: 0,
        }
    }
}

impl AgentSession for ScriptedSession {
    fn generate(&mut self, ctx: &GenerationContext<'_>) -> Result<String, AgentError> {
        let line =
            self.lines
                .get(self.consumed)
                .cloned()
                .ok_or_else(|| AgentError::FixtureExhausted {
                    agent_id: self.agent_id.clone(),
                    round: ctx.round,
                })?;
        self.consumed += 1;
        Ok(line)
    }

    fn summarize(
        &mut self,
        source_text: &str,
        _rendered_prompt: &str,
    ) -> Result<String, AgentError> {
        // Replays carry no live model; condense deterministically without
        // consuming fixture lines.
        Ok(tail_words(source_text, 150))
    }
}
