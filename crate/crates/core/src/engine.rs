//! Debate orchestration for a single question: independent starting round,
//! peer-informed revision rounds, and per-round majority votes.

use thiserror::Error;

use crate::agents::{AgentError, AgentSession, ChatMessage, GenerationContext, SessionProvider};
use crate::answer::Answer;
use crate::extract::extract;
use crate::rng::derive_seed;
use crate::types::{
    answer_format_instruction, AgentSpec, DebateConfig, Generation, MajorityOutcome, PromptSet,
    Question, RoundRecord, TaskKind, Transcript, PLACEHOLDER_AGENT_RESPONSES, PLACEHOLDER_QUESTION,
    PLACEHOLDER_RESPONSE,
};
use crate::vote::{majority, VoteError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("template is missing the {0} placeholder")]
    TemplateMissingPlaceholder(&'static str),
    #[error("debate prompt requested for an empty peer set")]
    EmptyPeerSet,
    #[error("question failed at agent {agent_id} round {round}: {source}")]
    QuestionFailed {
        agent_id: String,
        round: u32,
        #[source]
        source: AgentError,
    },
    #[error(transparent)]
    Vote(#[from] VoteError),
}

/// Renders the starting-round task prompt: substitutes the question (with
/// its lettered options, for multiple choice) and appends the task's
/// answer-format instruction.
pub fn render_task_prompt(question: &Question, prompts: &PromptSet) -> Result<String, EngineError> {
    if !prompts.task_prompt_template.contains(PLACEHOLDER_QUESTION) {
        return Err(EngineError::TemplateMissingPlaceholder(
            PLACEHOLDER_QUESTION,
        ));
    }
    let question_block = match question.task {
        TaskKind::MultipleChoice => {
            let options = question
                .choices
                .iter()
                .map(|c| format!("{}) {}", c.letter, c.text))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{}: {}", question.text, options)
        }
        TaskKind::OpenNumeric => question.text.clone(),
    };
    Ok(format!(
        "{} {}",
        prompts
            .task_prompt_template
            .replace(PLACEHOLDER_QUESTION, &question_block),
        answer_format_instruction(question.task)
    ))
}

/// Renders a debate-round prompt over peers' previous responses, each
/// prefixed "Agent k response:" in the order given (roster order, self
/// skipped).
pub fn render_debate_prompt(
    peer_texts: &[String],
    prompts: &PromptSet,
) -> Result<String, EngineError> {
    if peer_texts.is_empty() {
        return Err(EngineError::EmptyPeerSet);
    }
    if !prompts
        .debate_prompt_template
        .contains(PLACEHOLDER_AGENT_RESPONSES)
    {
        return Err(EngineError::TemplateMissingPlaceholder(
            PLACEHOLDER_AGENT_RESPONSES,
        ));
    }
    let block = peer_texts
        .iter()
        .enumerate()
        .map(|(idx, text)| format!("Agent {} response: {}", idx + 1, text))
        .collect::<Vec<_>>()
        .join("\n\n");
    Ok(prompts
        .debate_prompt_template
        .replace(PLACEHOLDER_AGENT_RESPONSES, &block))
}

/// Collects the peer texts agent `self_position` will see from the previous
/// round. If their combined length exceeds `budget` characters, every peer
/// text is replaced by the agent's own summarizer output (count preserved).
pub fn assemble_peer_context(
    self_position: usize,
    prev: &RoundRecord,
    budget: usize,
    summarizer: &mut dyn AgentSession,
    prompts: &PromptSet,
) -> Result<Vec<String>, AgentError> {
    let raw: Vec<&str> = prev
        .generations
        .iter()
        .enumerate()
        .filter(|(pos, _)| *pos != self_position)
        .map(|(_, g)| g.raw_text.as_str())
        .collect();
    let total: usize = raw.iter().map(|t| t.chars().count()).sum();
    if total <= budget {
        return Ok(raw.into_iter().map(str::to_string).collect());
    }
    let mut summarized = Vec::with_capacity(raw.len());
    for text in raw {
        let rendered = prompts
            .summarize_prompt_template
            .replace(PLACEHOLDER_RESPONSE, text);
        summarized.push(summarizer.summarize(text, &rendered)?);
    }
    Ok(summarized)
}

/// Runs one full debate and returns its transcript.
///
/// Round 1 poses the task prompt to every agent independently. Rounds 2..T
/// extend each agent's own conversation with a debate prompt over its
/// peers' previous-round texts (summarized when over budget) and never its
/// own. Majorities are computed per round; the final answer is the round-T
/// majority. A single-agent "debate" reuses the starting answer for every
/// later round, having no peers to argue with.
pub fn run_debate(
    question: &Question,
    config: &DebateConfig,
    seed: u64,
    provider: &dyn SessionProvider,
) -> Result<Transcript, EngineError> {
    let n = config.roster.len();
    let rounds = config.rounds;

    let mut sessions: Vec<Box<dyn AgentSession + '_>> = Vec::with_capacity(n);
    let mut histories: Vec<Vec<ChatMessage>> = vec![Vec::new(); n];
    let mut order: Vec<&AgentSpec> = config.roster.iter().collect();
    order.sort_by_key(|spec| spec.position);
    for spec in &order {
        let agent_seed = derive_seed(seed, &[spec.position as u64 + 1]);
        sessions.push(
            provider
                .open(spec, question, agent_seed)
                .map_err(|e| fail(spec.agent_id.clone(), 1, e))?,
        );
    }

    let mut records: Vec<RoundRecord> = Vec::with_capacity(rounds as usize);

    // Starting round: independent answers.
    let task_prompt = render_task_prompt(question, &config.prompts)?;
    let mut generations = Vec::with_capacity(n);
    for (idx, spec) in order.iter().enumerate() {
        histories[idx].push(ChatMessage::user(task_prompt.clone()));
        let ctx = GenerationContext {
            agent: spec,
            history: &histories[idx],
            params: &spec.params,
            question,
            round: 1,
            peer_answers: &[],
        };
        let raw_text = sessions[idx]
            .generate(&ctx)
            .map_err(|e| fail(spec.agent_id.clone(), 1, e))?;
        histories[idx].push(ChatMessage::assistant(raw_text.clone()));
        generations.push(Generation {
            agent_id: spec.agent_id.clone(),
            round: 1,
            raw_text: raw_text.clone(),
            extracted: extract(&raw_text, question.task),
        });
    }
    records.push(RoundRecord {
        round: 1,
        generations,
    });

    // Debate rounds: every agent sees all round t-1 texts before any round
    // t+1 request exists (the previous record is complete by construction).
    for round in 2..=rounds {
        let prev = records.last().unwrap().clone();
        if n == 1 {
            let mut generation = prev.generations[0].clone();
            generation.round = round;
            records.push(RoundRecord {
                round,
                generations: vec![generation],
            });
            continue;
        }
        let mut generations = Vec::with_capacity(n);
        for (idx, spec) in order.iter().enumerate() {
            let peer_answers: Vec<Answer> = prev
                .generations
                .iter()
                .enumerate()
                .filter(|(pos, _)| *pos != idx)
                .map(|(_, g)| g.extracted.clone())
                .collect();
            let peer_texts = assemble_peer_context(
                idx,
                &prev,
                config.context_char_budget,
                sessions[idx].as_mut(),
                &config.prompts,
            )
            .map_err(|e| fail(spec.agent_id.clone(), round, e))?;
            let debate_prompt = render_debate_prompt(&peer_texts, &config.prompts)?;
            histories[idx].push(ChatMessage::user(debate_prompt));
            let ctx = GenerationContext {
                agent: spec,
                history: &histories[idx],
                params: &spec.params,
                question,
                round,
                peer_answers: &peer_answers,
            };
            let raw_text = sessions[idx]
                .generate(&ctx)
                .map_err(|e| fail(spec.agent_id.clone(), round, e))?;
            histories[idx].push(ChatMessage::assistant(raw_text.clone()));
            generations.push(Generation {
                agent_id: spec.agent_id.clone(),
                round,
                raw_text: raw_text.clone(),
                extracted: extract(&raw_text, question.task),
            });
        }
        records.push(RoundRecord { round, generations });
    }

    let per_round_majority: Vec<MajorityOutcome> = records
        .iter()
        .map(|record| {
            let answers: Vec<Answer> = record
                .generations
                .iter()
                .map(|g| g.extracted.clone())
                .collect();
            majority(&answers)
        })
        .collect::<Result<_, _>>()?;
    let final_answer = per_round_majority.last().unwrap().answer.clone();

    Ok(Transcript {
        question_id: question.id.clone(),
        rounds: records,
        per_round_majority,
        final_answer,
    })
}

fn fail(agent_id: String, round: u32, source: AgentError) -> EngineError {
    EngineError::QuestionFailed {
        agent_id,
        round,
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{OfflineProvider, ReplayFixtures};
    use crate::types::{
        AgentSpec, BackendKind, Choice, GenerationParams, DEFAULT_CONTEXT_CHAR_BUDGET,
    };

    fn mc_question() -> Question {
        Question {
            id: "q-hall".into(),
            task: TaskKind::MultipleChoice,
            text: "What can a large performance venue also host?".into(),
            choices: vec![
                Choice {
                    letter: 'A',
                    text: "a commercial fair".into(),
                },
                Choice {
                    letter: 'B',
                    text: "a university lecture".into(),
                },
                Choice {
                    letter: 'C',
                    text: "loud shouting".into(),
                },
                Choice {
                    letter: 'D',
                    text: "a whole city".into(),
                },
                Choice {
                    letter: 'E',
                    text: "a stage play".into(),
                },
            ],
            ground_truth: Answer::choice('E'),
        }
    }

    fn synthetic_spec(id: &str, position: usize, p: f64, s: f64, r: f64) -> AgentSpec {
        AgentSpec {
            agent_id: id.into(),
            backend: BackendKind::Synthetic {
                p_correct: p,
                sycophancy: s,
                revise_prob: r,
            },
            params: GenerationParams::default(),
            position,
        }
    }

    fn config(roster: Vec<AgentSpec>, rounds: u32) -> DebateConfig {
        DebateConfig {
            rounds,
            roster,
            prompts: PromptSet::default_for(TaskKind::MultipleChoice),
            context_char_budget: DEFAULT_CONTEXT_CHAR_BUDGET,
        }
    }

    #[test]
    fn task_prompt_lists_options_and_format_instruction() {
        let prompt = render_task_prompt(
            &mc_question(),
            &PromptSet::default_for(TaskKind::MultipleChoice),
        )
        .unwrap();
        assert!(prompt.contains("A) a commercial fair, B) a university lecture"));
        assert!(prompt.contains("putting the answer in the form (X) at the end of your response."));
    }

    #[test]
    fn default_prompt_wording_is_pinned() {
        // Exact composite wording of the default prompts; downstream runs
        // and stored transcripts depend on this staying stable.
        let prompt = render_task_prompt(
            &mc_question(),
            &PromptSet::default_for(TaskKind::MultipleChoice),
        )
        .unwrap();
        assert_eq!(
            prompt,
            "Can you answer the following question as accurately as possible? \
             What can a large performance venue also host?: A) a commercial fair, \
             B) a university lecture, C) loud shouting, D) a whole city, E) a stage play \
             Explain your answer by providing a bullet point summary of your reasoning, \
             putting the answer in the form (X) at the end of your response."
        );

        let debate = render_debate_prompt(
            &["peer text".into()],
            &PromptSet::default_for(TaskKind::MultipleChoice),
        )
        .unwrap();
        assert_eq!(
            debate,
            "These are the solutions to the problem from other agents: \
             Agent 1 response: peer text \
             Using the reasoning from other agents as additional advice, can you give an \
             updated answer? Explain your reasoning. Examine your solution and that of \
             other agents. Put your answer in the form (X) at the end of your response."
        );

        let numeric = Question {
            id: "q-num".into(),
            task: TaskKind::OpenNumeric,
            text: "How many guests make the venues equal in cost?".into(),
            choices: vec![],
            ground_truth: Answer::numeric("20").unwrap(),
        };
        let prompt =
            render_task_prompt(&numeric, &PromptSet::default_for(TaskKind::OpenNumeric)).unwrap();
        assert_eq!(
            prompt,
            "Can you solve the following math problem? \
             How many guests make the venues equal in cost? \
             Provide a bullet point summary of your reasoning. Your final answer should be \
             a single numerical number, in the form \\boxed{answer}, at the end of your response."
        );
    }

    #[test]
    fn numeric_task_prompt_requests_boxed_answer() {
        let q = Question {
            id: "q-num".into(),
            task: TaskKind::OpenNumeric,
            text: "How many guests make the venues equal in cost?".into(),
            choices: vec![],
            ground_truth: Answer::numeric("20").unwrap(),
        };
        let prompt =
            render_task_prompt(&q, &PromptSet::default_for(TaskKind::OpenNumeric)).unwrap();
        assert!(prompt.contains("in the form \\boxed{answer}, at the end"));
        assert!(!prompt.contains("{QUESTION}"));
    }

    #[test]
    fn task_template_without_placeholder_errors() {
        let mut prompts = PromptSet::default_for(TaskKind::MultipleChoice);
        prompts.task_prompt_template = "no placeholder here".into();
        assert!(matches!(
            render_task_prompt(&mc_question(), &prompts),
            Err(EngineError::TemplateMissingPlaceholder("{QUESTION}"))
        ));
    }

    #[test]
    fn debate_prompt_preserves_order_and_numbers_peers() {
        let prompts = PromptSet::default_for(TaskKind::MultipleChoice);
        let rendered = render_debate_prompt(&["textA".into(), "textB".into()], &prompts).unwrap();
        let a = rendered.find("Agent 1 response: textA").unwrap();
        let b = rendered.find("Agent 2 response: textB").unwrap();
        assert!(a < b);

        let single = render_debate_prompt(&["t".into()], &prompts).unwrap();
        assert!(single.contains("Agent 1 response: t"));

        assert!(matches!(
            render_debate_prompt(&[], &prompts),
            Err(EngineError::EmptyPeerSet)
        ));
    }

    fn record_of(texts: &[&str]) -> RoundRecord {
        RoundRecord {
            round: 1,
            generations: texts
                .iter()
                .enumerate()
                .map(|(pos, t)| Generation {
                    agent_id: format!("a{pos}"),
                    round: 1,
                    raw_text: t.to_string(),
                    extracted: Answer::Abstain,
                })
                .collect(),
        }
    }

    struct FixedSummarizer;
    impl AgentSession for FixedSummarizer {
        fn generate(&mut self, _ctx: &GenerationContext<'_>) -> Result<String, AgentError> {
            unreachable!("summarizer-only session")
        }
        fn summarize(&mut self, _source: &str, _prompt: &str) -> Result<String, AgentError> {
            Ok("short summary (B)".into())
        }
    }

    #[test]
    fn peer_context_within_budget_stays_raw() {
        let prev = record_of(&["self text", "peer one", "peer two"]);
        let prompts = PromptSet::default_for(TaskKind::MultipleChoice);
        let got = assemble_peer_context(0, &prev, 1000, &mut FixedSummarizer, &prompts).unwrap();
        assert_eq!(got, vec!["peer one".to_string(), "peer two".to_string()]);
    }

    #[test]
    fn peer_context_over_budget_summarizes_every_entry() {
        let prev = record_of(&["self text", "peer one", "peer two"]);
        let prompts = PromptSet::default_for(TaskKind::MultipleChoice);
        let got = assemble_peer_context(0, &prev, 3, &mut FixedSummarizer, &prompts).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|t| t == "short summary (B)"));

        // budget = 0 summarizes everything non-empty.
        let zero = assemble_peer_context(0, &prev, 0, &mut FixedSummarizer, &prompts).unwrap();
        assert_eq!(zero.len(), 2);
        assert!(zero.iter().all(|t| t == "short summary (B)"));
    }

    #[test]
    fn single_round_debate_is_the_ensemble_baseline() {
        let roster = vec![
            synthetic_spec("a", 0, 1.0, 0.0, 0.0),
            synthetic_spec("b", 1, 1.0, 0.0, 0.0),
            synthetic_spec("c", 2, 0.0, 0.0, 0.0),
        ];
        let transcript = run_debate(
            &mc_question(),
            &config(roster, 1),
            7,
            &OfflineProvider::new(),
        )
        .unwrap();
        assert_eq!(transcript.rounds.len(), 1);
        assert_eq!(transcript.per_round_majority.len(), 1);
        assert_eq!(transcript.final_answer, Answer::choice('E'));
    }

    #[test]
    fn full_sycophancy_round_two_equals_each_peer_majority() {
        // With sycophancy 1 and revise 0, every round-2 answer must equal
        // the majority over that agent's own peer set from round 1 (self
        // excluded, ties toward the earliest peer position). Checked
        // independently from the transcript for many seeds.
        for seed in 0..40 {
            let roster = vec![
                synthetic_spec("a", 0, 0.5, 1.0, 0.0),
                synthetic_spec("b", 1, 0.5, 1.0, 0.0),
                synthetic_spec("c", 2, 0.5, 1.0, 0.0),
            ];
            let transcript = run_debate(
                &mc_question(),
                &config(roster, 2),
                seed,
                &OfflineProvider::new(),
            )
            .unwrap();
            let round1: Vec<Answer> = transcript.rounds[0]
                .generations
                .iter()
                .map(|g| g.extracted.clone())
                .collect();
            for (pos, generation) in transcript.rounds[1].generations.iter().enumerate() {
                let peers: Vec<Answer> = round1
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| *p != pos)
                    .map(|(_, a)| a.clone())
                    .collect();
                let expected = crate::vote::majority(&peers).unwrap().answer;
                assert_eq!(generation.extracted, expected, "seed {seed} agent {pos}");
            }
        }
    }

    fn scripted_spec(id: &str, position: usize) -> AgentSpec {
        AgentSpec {
            agent_id: id.into(),
            backend: BackendKind::Scripted {
                fixture: "f".into(),
            },
            params: GenerationParams::default(),
            position,
        }
    }

    #[test]
    fn adopter_follows_clear_peer_majority() {
        // Three scripted peers answer (B), (C), (B); the full adopter at the
        // last position starts correct (E) and must move to B.
        let mut fixtures = ReplayFixtures::default();
        for (id, letter) in [("a", 'B'), ("b", 'C'), ("c", 'B')] {
            fixtures.insert(
                "q-hall",
                id,
                vec![format!("I say ({letter})"), format!("Still ({letter})")],
            );
        }
        let roster = vec![
            scripted_spec("a", 0),
            scripted_spec("b", 1),
            scripted_spec("c", 2),
            synthetic_spec("syn", 3, 1.0, 1.0, 0.0),
        ];
        let provider = OfflineProvider::new().with_fixtures("f", fixtures);
        let transcript = run_debate(&mc_question(), &config(roster, 2), 3, &provider).unwrap();
        let syn = transcript.rounds[1]
            .generations
            .iter()
            .find(|g| g.agent_id == "syn")
            .unwrap();
        assert_eq!(syn.extracted, Answer::choice('B'));
    }

    #[test]
    fn adopter_peer_tie_resolves_to_earliest_position() {
        // Two scripted peers split (C) vs (B); the adopter sees a tie and
        // takes the earliest peer's answer regardless of its own (E).
        let mut fixtures = ReplayFixtures::default();
        fixtures.insert("q-hall", "a", vec!["first (C)".into(), "again (C)".into()]);
        fixtures.insert("q-hall", "b", vec!["first (B)".into(), "again (B)".into()]);
        let roster = vec![
            synthetic_spec("syn", 0, 1.0, 1.0, 0.0),
            scripted_spec("a", 1),
            scripted_spec("b", 2),
        ];
        let provider = OfflineProvider::new().with_fixtures("f", fixtures);
        let transcript = run_debate(&mc_question(), &config(roster, 2), 3, &provider).unwrap();
        let syn = transcript.rounds[1]
            .generations
            .iter()
            .find(|g| g.agent_id == "syn")
            .unwrap();
        assert_eq!(syn.extracted, Answer::choice('C'));
    }

    #[test]
    fn transcript_shape_and_reextraction_invariants() {
        let roster = vec![
            synthetic_spec("a", 0, 0.9, 0.8, 0.1),
            synthetic_spec("b", 1, 0.3, 0.8, 0.1),
            synthetic_spec("c", 2, 0.3, 0.8, 0.1),
        ];
        let cfg = config(roster, 3);
        let transcript = run_debate(&mc_question(), &cfg, 42, &OfflineProvider::new()).unwrap();
        assert_eq!(transcript.rounds.len(), 3);
        for (idx, record) in transcript.rounds.iter().enumerate() {
            assert_eq!(record.round as usize, idx + 1);
            assert_eq!(record.generations.len(), 3);
            for generation in &record.generations {
                assert_eq!(
                    generation.extracted,
                    extract(&generation.raw_text, TaskKind::MultipleChoice)
                );
            }
        }
        assert_eq!(
            transcript.final_answer,
            transcript.per_round_majority.last().unwrap().answer
        );
    }

    #[test]
    fn round_one_is_independent_of_total_rounds() {
        let roster = |rounds| {
            config(
                vec![
                    synthetic_spec("a", 0, 0.6, 0.5, 0.4),
                    synthetic_spec("b", 1, 0.4, 0.5, 0.4),
                    synthetic_spec("c", 2, 0.2, 0.5, 0.4),
                ],
                rounds,
            )
        };
        let provider = OfflineProvider::new();
        for seed in 0..20 {
            let short = run_debate(&mc_question(), &roster(1), seed, &provider).unwrap();
            let long = run_debate(&mc_question(), &roster(3), seed, &provider).unwrap();
            assert_eq!(short.rounds[0], long.rounds[0], "seed {seed}");
            assert_eq!(short.per_round_majority[0], long.per_round_majority[0]);
        }
    }

    #[test]
    fn frozen_agents_never_move_the_majority() {
        // sycophancy 0 and revise 0: every round repeats round 1, so all
        // per-round majorities coincide and the debate delta is zero.
        for seed in 0..20 {
            let roster = vec![
                synthetic_spec("a", 0, 0.6, 0.0, 0.0),
                synthetic_spec("b", 1, 0.4, 0.0, 0.0),
                synthetic_spec("c", 2, 0.2, 0.0, 0.0),
            ];
            let transcript = run_debate(
                &mc_question(),
                &config(roster, 3),
                seed,
                &OfflineProvider::new(),
            )
            .unwrap();
            for outcome in &transcript.per_round_majority {
                assert_eq!(outcome, &transcript.per_round_majority[0], "seed {seed}");
            }
            let counts = crate::metrics::transitions(&transcript, &mc_question().ground_truth);
            assert_eq!(counts.ci + counts.ic, 0, "seed {seed}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let roster = vec![
            synthetic_spec("a", 0, 0.9, 0.8, 0.1),
            synthetic_spec("b", 1, 0.3, 0.8, 0.1),
        ];
        let cfg = config(roster, 2);
        let provider = OfflineProvider::new();
        let one = run_debate(&mc_question(), &cfg, 5, &provider).unwrap();
        let two = run_debate(&mc_question(), &cfg, 5, &provider).unwrap();
        assert_eq!(one, two);
        let other = run_debate(&mc_question(), &cfg, 6, &provider).unwrap();
        assert_eq!(one.question_id, other.question_id);
    }

    #[test]
    fn scripted_exhaustion_fails_the_question() {
        let mut fixtures = ReplayFixtures::default();
        fixtures.insert("q-hall", "only", vec!["just one line (E)".into()]);
        let roster = vec![
            AgentSpec {
                agent_id: "only".into(),
                backend: BackendKind::Scripted {
                    fixture: "f".into(),
                },
                params: GenerationParams::default(),
                position: 0,
            },
            synthetic_spec("syn", 1, 1.0, 0.0, 0.0),
        ];
        let provider = OfflineProvider::new().with_fixtures("f", fixtures);
        let err = run_debate(&mc_question(), &config(roster, 2), 1, &provider).unwrap_err();
        match err {
            EngineError::QuestionFailed {
                agent_id,
                round,
                source,
            } => {
                assert_eq!(agent_id, "only");
                assert_eq!(round, 2);
                assert!(matches!(source, AgentError::FixtureExhausted { .. }));
            }
            other => panic!("unexpected error: {other}"),
        }
    }
}
