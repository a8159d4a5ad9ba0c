//! Browser bindings for the synthetic debate model: seeded Monte-Carlo
//! simulation, exact enumeration, and the answer-extraction parser, each
//! exposed as a JSON-in/JSON-out function.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use debate_lab_core::agents::OfflineProvider;
use debate_lab_core::data::synthetic_questions;
use debate_lab_core::engine::run_debate;
use debate_lab_core::extract::extract;
use debate_lab_core::metrics::{summarize_run, RunSummary};
use debate_lab_core::oracle::{enumerate, OracleAgent, OracleConfig};
use debate_lab_core::rng::{derive_seed, fnv1a64};
use debate_lab_core::types::{
    AgentSpec, BackendKind, DebateConfig, GenerationParams, PromptSet, TaskKind,
    DEFAULT_CONTEXT_CHAR_BUDGET,
};

#[derive(Deserialize)]
struct AgentParams {
    p_correct: f64,
    sycophancy: f64,
    revise_prob: f64,
}

#[derive(Deserialize)]
struct SimulateParams {
    agents: Vec<AgentParams>,
    rounds: u32,
    choices: u32,
    questions: usize,
    seed: u64,
}

#[derive(Serialize)]
struct SimulateResponse {
    summary: RunSummary,
}

fn error_json(detail: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": detail.to_string() }).to_string()
}

fn run_simulation(params: &SimulateParams) -> Result<RunSummary, String> {
    if params.agents.is_empty() || params.agents.len() > 8 {
        return Err("agents must number 1..=8".into());
    }
    if !(1..=6).contains(&params.rounds) {
        return Err("rounds must lie in 1..=6".into());
    }
    if !(2..=26).contains(&params.choices) {
        return Err("choices must lie in 2..=26".into());
    }
    if !(1..=20_000).contains(&params.questions) {
        return Err("questions must lie in 1..=20000".into());
    }
    let roster: Vec<AgentSpec> = params
        .agents
        .iter()
        .enumerate()
        .map(|(position, a)| AgentSpec {
            agent_id: format!("agent-{position}"),
            backend: BackendKind::Synthetic {
                p_correct: a.p_correct,
                sycophancy: a.sycophancy,
                revise_prob: a.revise_prob,
            },
            params: GenerationParams::default(),
            position,
        })
        .collect();
    let config = DebateConfig {
        rounds: params.rounds,
        roster,
        prompts: PromptSet::default_for(TaskKind::MultipleChoice),
        context_char_budget: DEFAULT_CONTEXT_CHAR_BUDGET,
    };
    config.validate().map_err(|e| e.to_string())?;

    let questions = synthetic_questions(params.questions, TaskKind::MultipleChoice, params.choices);
    let provider = OfflineProvider::new();
    let mut transcripts = Vec::with_capacity(questions.len());
    for question in &questions {
        let question_seed = derive_seed(params.seed, &[fnv1a64(question.id.as_bytes())]);
        transcripts.push(
            run_debate(question, &config, question_seed, &provider).map_err(|e| e.to_string())?,
        );
    }
    let truths = questions
        .iter()
        .map(|q| (q.id.clone(), q.ground_truth.clone()))
        .collect();
    summarize_run(&transcripts, &truths, 0.0, 0).map_err(|e| e.to_string())
}

/// Seeded Monte-Carlo run of an all-synthetic debate.
///
/// Input: `{"agents":[{"p_correct":0.9,"sycophancy":0.8,"revise_prob":0.1},...],
/// "rounds":2,"choices":5,"questions":2000,"seed":7}`.
/// Output: `{"summary":{...}}` or `{"error":"..."}`.
#[wasm_bindgen]
pub fn simulate(params_json: &str) -> String {
    let params: SimulateParams = match serde_json::from_str(params_json) {
        Ok(p) => p,
        Err(e) => return error_json(e),
    };
    match run_simulation(&params) {
        Ok(summary) => {
            serde_json::to_string(&SimulateResponse { summary }).unwrap_or_else(error_json)
        }
        Err(e) => error_json(e),
    }
}

#[derive(Deserialize)]
struct OracleParams {
    agents: Vec<AgentParams>,
    rounds: u32,
    choices: u32,
}

/// Exact expected metrics by full enumeration (N <= 4, choices <= 6,
/// rounds <= 3). Same agent fields as [`simulate`].
#[wasm_bindgen]
pub fn oracle_exact(params_json: &str) -> String {
    let params: OracleParams = match serde_json::from_str(params_json) {
        Ok(p) => p,
        Err(e) => return error_json(e),
    };
    let config = OracleConfig {
        agents: params
            .agents
            .iter()
            .map(|a| OracleAgent {
                p_correct: a.p_correct,
                sycophancy: a.sycophancy,
                revise_prob: a.revise_prob,
            })
            .collect(),
        rounds: params.rounds,
        choices: params.choices,
    };
    match enumerate(&config) {
        Ok(report) => serde_json::to_string(&report).unwrap_or_else(error_json),
        Err(e) => error_json(e),
    }
}

/// Runs the answer extractor on free text. `task` is "multiple_choice" or
/// "open_numeric". Returns `{"kind":"choice","letter":"B","label":"B"}`,
/// a numeric analogue, or `{"kind":"abstain","label":"abstain"}`.
#[wasm_bindgen]
pub fn extract_answer(text: &str, task: &str) -> String {
    let task = match task {
        "multiple_choice" => TaskKind::MultipleChoice,
        "open_numeric" => TaskKind::OpenNumeric,
        other => return error_json(format!("unknown task {other:?}")),
    };
    let answer = extract(text, task);
    let mut value = serde_json::to_value(&answer).unwrap_or_default();
    if let Some(map) = value.as_object_mut() {
        map.insert("label".into(), serde_json::Value::String(answer.label()));
    }
    value.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_returns_summary_json() {
        let params = r#"{
            "agents": [
                {"p_correct": 0.3, "sycophancy": 0.8, "revise_prob": 0.1},
                {"p_correct": 0.3, "sycophancy": 0.8, "revise_prob": 0.1},
                {"p_correct": 0.9, "sycophancy": 0.8, "revise_prob": 0.1}
            ],
            "rounds": 2, "choices": 5, "questions": 400, "seed": 7
        }"#;
        let out = simulate(params);
        let value: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(value.get("error").is_none(), "{out}");
        let summary = &value["summary"];
        assert_eq!(summary["rounds"], 2);
        assert_eq!(summary["per_round_accuracy"].as_array().unwrap().len(), 2);
        // Degradation configuration: debate should hurt.
        assert!(summary["delta"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn simulate_is_deterministic_in_the_seed() {
        let params = r#"{"agents":[{"p_correct":0.5,"sycophancy":0.5,"revise_prob":0.5}],
                         "rounds":2,"choices":3,"questions":50,"seed":11}"#;
        assert_eq!(simulate(params), simulate(params));
    }

    #[test]
    fn oracle_and_simulation_agree_roughly() {
        let agents = r#"[
            {"p_correct": 0.3, "sycophancy": 0.8, "revise_prob": 0.1},
            {"p_correct": 0.3, "sycophancy": 0.8, "revise_prob": 0.1},
            {"p_correct": 0.9, "sycophancy": 0.8, "revise_prob": 0.1}
        ]"#;
        let sim: serde_json::Value = serde_json::from_str(&simulate(&format!(
            r#"{{"agents":{agents},"rounds":2,"choices":5,"questions":4000,"seed":3}}"#
        )))
        .unwrap();
        let exact: serde_json::Value = serde_json::from_str(&oracle_exact(&format!(
            r#"{{"agents":{agents},"rounds":2,"choices":5}}"#
        )))
        .unwrap();
        let sim_wo = sim["summary"]["wo_debate"].as_f64().unwrap();
        let exact_wo = exact["wo_debate"].as_f64().unwrap();
        assert!((sim_wo - exact_wo).abs() < 0.03, "{sim_wo} vs {exact_wo}");
    }

    #[test]
    fn oracle_rejects_oversize_requests() {
        let out = oracle_exact(
            r#"{"agents":[{"p_correct":0.5,"sycophancy":0.5,"revise_prob":0.5}],
                "rounds":9,"choices":5}"#,
        );
        let value: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(value["error"].as_str().unwrap().contains("too large"));
    }

    #[test]
    fn extract_answer_covers_both_tasks() {
        let choice: serde_json::Value = serde_json::from_str(&extract_answer(
            "considered (A), settled on (B)",
            "multiple_choice",
        ))
        .unwrap();
        assert_eq!(choice["kind"], "choice");
        assert_eq!(choice["letter"], "B");
        assert_eq!(choice["label"], "B");

        let numeric: serde_json::Value = serde_json::from_str(&extract_answer(
            "so the result is $\\boxed{33.33\\%}$ overall",
            "open_numeric",
        ))
        .unwrap();
        assert_eq!(numeric["kind"], "numeric");
        assert_eq!(numeric["value"], "33.33");

        let abstain: serde_json::Value =
            serde_json::from_str(&extract_answer("no marker at all", "multiple_choice")).unwrap();
        assert_eq!(abstain["kind"], "abstain");

        let bad: serde_json::Value =
            serde_json::from_str(&extract_answer("x", "weird_task")).unwrap();
        assert!(bad["error"].as_str().is_some());
    }
}
