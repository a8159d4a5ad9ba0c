//! Seeded synthetic agent: a conformity model whose accuracy and
//! peer-following tendency are explicit parameters.
//!
//! Round 1 draws an independent answer (correct with probability
//! `p_correct`). Later rounds adopt the peer majority with probability
//! `sycophancy`, otherwise redraw with probability `revise_prob`, otherwise
//! keep the previous answer. Every draw comes from a per-(agent, question)
//! splitmix64 stream, so whole runs replay bit-identically from their seed.

use crate::agents::{tail_words, AgentError, AgentSession, GenerationContext};
use crate::answer::Answer;
use crate::rng::SplitMix64;
use crate::types::{Question, TaskKind};
use crate::vote::majority;

#[derive(Debug, Clone, Copy)]
pub struct SyntheticParams {
    pub p_correct: f64,
    pub sycophancy: f64,
    pub revise_prob: f64,
}

/// Evolving state of one synthetic agent within one debate.
#[derive(Debug, Clone)]
pub struct SyntheticState {
    rng: SplitMix64,
    current_answer: Option<Answer>,
}

impl SyntheticState {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
            current_answer: None,
        }
    }

    pub fn current_answer(&self) -> Option<&Answer> {
        self.current_answer.as_ref()
    }
}

fn draw_independent(rng: &mut SplitMix64, params: &SyntheticParams, question: &Question) -> Answer {
    let correct = rng.next_f64() < params.p_correct;
    match question.task {
        TaskKind::MultipleChoice => {
            let truth_letter = match &question.ground_truth {
                Answer::Choice { letter } => *letter,
                _ => unreachable!("validated multiple_choice question"),
            };
            if correct {
                return Answer::choice(truth_letter);
            }
            let wrong: Vec<char> = question
                .choices
                .iter()
                .map(|c| c.letter)
                .filter(|l| *l != truth_letter)
                .collect();
            if wrong.is_empty() {
                // Single-choice question: no wrong letter exists.
                return Answer::choice(truth_letter);
            }
            let idx = rng.below(wrong.len() as u64) as usize;
            Answer::choice(wrong[idx])
        }
        TaskKind::OpenNumeric => {
            let truth = match &question.ground_truth {
                Answer::Numeric { value } => value.clone(),
                _ => unreachable!("validated open_numeric question"),
            };
            if correct {
                Answer::Numeric { value: truth }
            } else {
                // Canonical wrong value: ground truth + 1. Keeps the answer
                // space finite so exact enumeration stays tractable.
                Answer::Numeric {
                    value: truth.plus_one(),
                }
            }
        }
    }
}

/// Advances a synthetic agent by one round.
///
/// `peer_answers` are the other agents' extracted answers from the previous
/// round in roster order; an empty slice means the independent starting
/// round. Peer-majority ties resolve exactly as in [`majority`] (earliest
/// peer position wins). If every peer abstained the agent keeps its current
/// answer: it has nothing to adopt and cannot voice an abstention.
pub fn synthetic_step(
    state: &mut SyntheticState,
    params: &SyntheticParams,
    peer_answers: &[Answer],
    question: &Question,
) {
    if peer_answers.is_empty() || state.current_answer.is_none() {
        state.current_answer = Some(draw_independent(&mut state.rng, params, question));
        return;
    }
    let adopt = state.rng.next_f64() < params.sycophancy;
    if adopt {
        let outcome = majority(peer_answers).expect("non-empty peer answers");
        if !outcome.answer.is_abstain() {
            state.current_answer = Some(outcome.answer);
        }
        return;
    }
    if state.rng.next_f64() < params.revise_prob {
        state.current_answer = Some(draw_independent(&mut state.rng, params, question));
    }
}

/// [`AgentSession`] wrapper rendering the synthetic answer in the task's
/// required marker format.
pub struct SyntheticSession {
    params: SyntheticParams,
    state: SyntheticState,
}

impl SyntheticSession {
    pub fn new(params: SyntheticParams, seed: u64) -> Self {
        Self {
            params,
            state: SyntheticState::new(seed),
        }
    }
}

impl AgentSession for SyntheticSession {
    fn generate(&mut self, ctx: &GenerationContext<'_>) -> Result<String, AgentError> {
        synthetic_step(
            &mut self.state,
            &self.params,
            ctx.peer_answers,
            ctx.question,
        );
        let answer = self
            .state
            .current_answer
            .as_ref()
            .expect("synthetic_step always sets an answer");
        let marker = answer
            .render_marker(ctx.question.task)
            .expect("synthetic answers match the task kind");
        Ok(format!("The answer is {marker}."))
    }

    fn summarize(
        &mut self,
        source_text: &str,
        _rendered_prompt: &str,
    ) -> Result<String, AgentError> {
        Ok(tail_words(source_text, 150))
    }
}
