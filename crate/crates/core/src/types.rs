//! Shared domain types: questions, agent rosters, debate configuration, and
//! per-question transcripts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::Answer;

/// Answer format a task expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Lettered options; answers are stated as `(X)`.
    MultipleChoice,
    /// Open-ended numeric answers stated as `\boxed{value}`.
    OpenNumeric,
}

/// One lettered option of a multiple-choice question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub letter: char,
    pub text: String,
}

/// One task item with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub task: TaskKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<Choice>,
    pub ground_truth: Answer,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InvalidQuestion {
    #[error("multiple_choice question must carry a non-empty choice list")]
    MissingChoices,
    #[error("open_numeric question must not carry choices")]
    UnexpectedChoices,
    #[error("choice letters must be unique uppercase A..Z, got {0:?}")]
    BadChoiceLetter(char),
    #[error("ground truth letter {0:?} does not appear in the choice list")]
    TruthNotInChoices(char),
    #[error("ground truth kind does not match the task kind")]
    TruthKindMismatch,
}

impl Question {
    pub fn validate(&self) -> Result<(), InvalidQuestion> {
        match self.task {
            TaskKind::MultipleChoice => {
                if self.choices.is_empty() {
                    return Err(InvalidQuestion::MissingChoices);
                }
                let mut seen = Vec::new();
                for c in &self.choices {
                    if !c.letter.is_ascii_uppercase() || seen.contains(&c.letter) {
                        return Err(InvalidQuestion::BadChoiceLetter(c.letter));
                    }
                    seen.push(c.letter);
                }
                match &self.ground_truth {
                    Answer::Choice { letter } => {
                        if !seen.contains(letter) {
                            return Err(InvalidQuestion::TruthNotInChoices(*letter));
                        }
                    }
                    _ => return Err(InvalidQuestion::TruthKindMismatch),
                }
            }
            TaskKind::OpenNumeric => {
                if !self.choices.is_empty() {
                    return Err(InvalidQuestion::UnexpectedChoices);
                }
                if !matches!(self.ground_truth, Answer::Numeric { .. }) {
                    return Err(InvalidQuestion::TruthKindMismatch);
                }
            }
        }
        Ok(())
    }
}

/// Generation parameters sent to a backend. `temperature: None` means the
/// field is omitted on the wire so the provider default applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: None,
            top_p: 0.9,
            max_tokens: 2048,
        }
    }
}

/// How an agent produces text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    /// Live chat-completions endpoint.
    HttpChat { model: String, endpoint: String },
    /// Replays pre-recorded responses from a fixture file.
    Scripted { fixture: String },
    /// Seeded conformity model: answers correctly with probability
    /// `p_correct`, adopts the peer majority with probability `sycophancy`,
    /// otherwise re-derives its answer with probability `revise_prob`.
    Synthetic {
        p_correct: f64,
        sycophancy: f64,
        revise_prob: f64,
    },
}

impl BackendKind {
    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::HttpChat { .. } => "http_chat",
            BackendKind::Scripted { .. } => "scripted",
            BackendKind::Synthetic { .. } => "synthetic",
        }
    }
}

/// One agent in a roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub backend: BackendKind,
    #[serde(default)]
    pub params: GenerationParams,
    /// 0-based slot in roster order; positions form 0..N-1.
    pub position: usize,
}

/// Prompt templates. Placeholders: `{QUESTION}`, `{AGENT_RESPONSES}`,
/// `{RESPONSE}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub task_prompt_template: String,
    pub debate_prompt_template: String,
    pub summarize_prompt_template: String,
}

pub const PLACEHOLDER_QUESTION: &str = "{QUESTION}";
pub const PLACEHOLDER_AGENT_RESPONSES: &str = "{AGENT_RESPONSES}";
pub const PLACEHOLDER_RESPONSE: &str = "{RESPONSE}";

impl PromptSet {
    /// Default templates, with the closing answer-format sentence of the
    /// debate prompt adjusted to the task.
    pub fn default_for(task: TaskKind) -> PromptSet {
        let task_prompt_template = match task {
            TaskKind::MultipleChoice => {
                "Can you answer the following question as accurately as possible? {QUESTION}"
            }
            TaskKind::OpenNumeric => "Can you solve the following math problem? {QUESTION}",
        }
        .to_string();
        let debate_prompt_template = format!(
            "These are the solutions to the problem from other agents: {{AGENT_RESPONSES}} \
             Using the reasoning from other agents as additional advice, can you give an updated answer? \
             Explain your reasoning. Examine your solution and that of other agents. {}",
            answer_format_instruction_short(task)
        );
        let summarize_prompt_template = "Summarize the following solution in at most 150 words, \
             preserving the reasoning steps and the final answer: {RESPONSE}"
            .to_string();
        PromptSet {
            task_prompt_template,
            debate_prompt_template,
            summarize_prompt_template,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if !self.task_prompt_template.contains(PLACEHOLDER_QUESTION) {
            return Err(InvalidConfig::MissingPlaceholder {
                template: "task_prompt_template",
                placeholder: PLACEHOLDER_QUESTION,
            });
        }
        if !self
            .debate_prompt_template
            .contains(PLACEHOLDER_AGENT_RESPONSES)
        {
            return Err(InvalidConfig::MissingPlaceholder {
                template: "debate_prompt_template",
                placeholder: PLACEHOLDER_AGENT_RESPONSES,
            });
        }
        if !self
            .summarize_prompt_template
            .contains(PLACEHOLDER_RESPONSE)
        {
            return Err(InvalidConfig::MissingPlaceholder {
                template: "summarize_prompt_template",
                placeholder: PLACEHOLDER_RESPONSE,
            });
        }
        Ok(())
    }
}

/// Instruction appended to the first-round task prompt.
pub fn answer_format_instruction(task: TaskKind) -> &'static str {
    match task {
        TaskKind::MultipleChoice => {
            "Explain your answer by providing a bullet point summary of your reasoning, \
             putting the answer in the form (X) at the end of your response."
        }
        TaskKind::OpenNumeric => {
            "Provide a bullet point summary of your reasoning. Your final answer should be \
             a single numerical number, in the form \\boxed{answer}, at the end of your response."
        }
    }
}

fn answer_format_instruction_short(task: TaskKind) -> &'static str {
    match task {
        TaskKind::MultipleChoice => "Put your answer in the form (X) at the end of your response.",
        TaskKind::OpenNumeric => {
            "Put your answer in the form \\boxed{answer} at the end of your response."
        }
    }
}

/// Full configuration of one debate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    /// Total rounds T >= 1; round 1 is the independent starting round.
    pub rounds: u32,
    pub roster: Vec<AgentSpec>,
    pub prompts: PromptSet,
    /// Peer texts whose combined length exceeds this many characters get
    /// summarized before entering a debate prompt.
    pub context_char_budget: usize,
}

pub const DEFAULT_CONTEXT_CHAR_BUDGET: usize = 24_000;

#[derive(Debug, Error, PartialEq)]
pub enum InvalidConfig {
    #[error("rounds must be >= 1")]
    NoRounds,
    #[error("roster must contain at least one agent")]
    EmptyRoster,
    #[error("agent ids must be unique; {0:?} repeats")]
    DuplicateAgentId(String),
    #[error("roster positions must be a permutation of 0..N-1")]
    BadPositions,
    #[error("{field} must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange { field: &'static str, value: f64 },
    #[error("top_p must lie in (0, 1], got {0}")]
    TopPOutOfRange(f64),
    #[error("max_tokens must be positive")]
    ZeroMaxTokens,
    #[error("{template} must contain the {placeholder} placeholder")]
    MissingPlaceholder {
        template: &'static str,
        placeholder: &'static str,
    },
}

impl DebateConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if self.rounds < 1 {
            return Err(InvalidConfig::NoRounds);
        }
        if self.roster.is_empty() {
            return Err(InvalidConfig::EmptyRoster);
        }
        let n = self.roster.len();
        let mut seen_positions = vec![false; n];
        let mut ids: Vec<&str> = Vec::with_capacity(n);
        for agent in &self.roster {
            if ids.contains(&agent.agent_id.as_str()) {
                return Err(InvalidConfig::DuplicateAgentId(agent.agent_id.clone()));
            }
            ids.push(&agent.agent_id);
            if agent.position >= n || seen_positions[agent.position] {
                return Err(InvalidConfig::BadPositions);
            }
            seen_positions[agent.position] = true;
            if !(agent.params.top_p > 0.0 && agent.params.top_p <= 1.0) {
                return Err(InvalidConfig::TopPOutOfRange(agent.params.top_p));
            }
            if agent.params.max_tokens == 0 {
                return Err(InvalidConfig::ZeroMaxTokens);
            }
            if let BackendKind::Synthetic {
                p_correct,
                sycophancy,
                revise_prob,
            } = &agent.backend
            {
                for (field, value) in [
                    ("p_correct", *p_correct),
                    ("sycophancy", *sycophancy),
                    ("revise_prob", *revise_prob),
                ] {
                    if !(0.0..=1.0).contains(&value) || value.is_nan() {
                        return Err(InvalidConfig::ProbabilityOutOfRange { field, value });
                    }
                }
            }
        }
        self.prompts.validate()
    }
}

/// One agent's output for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub agent_id: String,
    /// 1-based round index.
    pub round: u32,
    pub raw_text: String,
    pub extracted: Answer,
}

/// All generations of one round, in roster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub generations: Vec<Generation>,
}

/// Outcome of a majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityOutcome {
    pub answer: Answer,
    pub tie: bool,
}

/// Full record of one debated question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub question_id: String,
    pub rounds: Vec<RoundRecord>,
    pub per_round_majority: Vec<MajorityOutcome>,
    pub final_answer: Answer,
}
