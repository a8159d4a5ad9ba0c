//! Experiment configuration: a single human-editable TOML file.
//!
//! ```toml
//! # Paper-style defaults: rounds = 2, top_p = 0.9, max_tokens = 2048.
//! task = "multiple_choice"
//! dataset = "data/csqa.jsonl"     # or [synthetic_dataset] below
//! sample_n = 100
//! seeds = [1, 2, 3, 4, 5]
//! rounds = 2
//! parallel = 4
//!
//! [[agents]]
//! id = "strong"
//! backend = "http_chat"
//! model = "gpt-4o-mini"
//! endpoint = "https://api.openai.com/v1"
//!
//! [[agents]]
//! id = "weak-1"
//! backend = "synthetic"
//! p_correct = 0.3
//! sycophancy = 0.8
//! revise_prob = 0.1
//! ```
//!
//! Secrets never live in the file: the API key is read from the
//! `DEBATE_LAB_API_KEY` environment variable.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::types::{
    AgentSpec, BackendKind, DebateConfig, GenerationParams, PromptSet, TaskKind,
    DEFAULT_CONTEXT_CHAR_BUDGET,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid TOML: {0}")]
    Toml(String),
    #[error("invalid config field {field}: {detail}")]
    Invalid { field: String, detail: String },
}

fn invalid(field: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        detail: detail.into(),
    }
}

/// Raw TOML shape. Everything optional except task, seeds, agents; `validate`
/// turns it into an [`ExperimentConfig`] with precise field errors.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub task: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub synthetic_dataset: Option<RawSyntheticDataset>,
    #[serde(default)]
    pub sample_n: Option<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub rounds: Option<u32>,
    #[serde(default)]
    pub parallel: Option<usize>,
    #[serde(default)]
    pub context_char_budget: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub resample_per_seed: Option<bool>,
    #[serde(default)]
    pub runs_dir: Option<PathBuf>,
    #[serde(default)]
    pub http_max_inflight: Option<usize>,
    #[serde(default)]
    pub prompts: Option<RawPrompts>,
    #[serde(default)]
    pub agents: Vec<RawAgent>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSyntheticDataset {
    pub count: usize,
    #[serde(default)]
    pub choices: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPrompts {
    #[serde(default)]
    pub task_prompt_template: Option<String>,
    #[serde(default)]
    pub debate_prompt_template: Option<String>,
    #[serde(default)]
    pub summarize_prompt_template: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAgent {
    pub id: String,
    pub backend: String,
    // http_chat
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub endpoint: Option<String>,
    // scripted
    #[serde(default)]
    pub fixture: Option<String>,
    // synthetic
    #[serde(default)]
    pub p_correct: Option<f64>,
    #[serde(default)]
    pub sycophancy: Option<f64>,
    #[serde(default)]
    pub revise_prob: Option<f64>,
    // generation parameters
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub top_p: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

/// Fully validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub label: String,
    pub run_id: Option<String>,
    pub dataset: Option<PathBuf>,
    pub synthetic_dataset: Option<SyntheticDataset>,
    pub sample_n: Option<usize>,
    pub seeds: Vec<u64>,
    pub rounds: u32,
    pub parallel: usize,
    pub context_char_budget: usize,
    pub tolerance: f64,
    pub resample_per_seed: bool,
    pub runs_dir: PathBuf,
    pub http_max_inflight: Option<usize>,
    pub prompts: PromptSet,
    pub roster: Vec<AgentSpec>,
    /// The original TOML text, persisted verbatim into the run directory.
    pub source_text: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SyntheticDataset {
    pub count: usize,
    pub choices: u32,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        Self::from_raw(raw, text.to_string())
    }

    fn from_raw(raw: RawConfig, source_text: String) -> Result<Self, ConfigError> {
        let task = match raw.task.as_str() {
            "multiple_choice" => TaskKind::MultipleChoice,
            "open_numeric" => TaskKind::OpenNumeric,
            other => {
                return Err(invalid(
                    "task",
                    format!("expected \"multiple_choice\" or \"open_numeric\", got {other:?}"),
                ))
            }
        };
        if raw.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        if raw.agents.is_empty() {
            return Err(invalid("agents", "at least one agent is required"));
        }
        let rounds = raw.rounds.unwrap_or(2);
        if rounds < 1 {
            return Err(invalid("rounds", "must be >= 1"));
        }
        let parallel = raw.parallel.unwrap_or(4);
        if parallel < 1 {
            return Err(invalid("parallel", "must be >= 1"));
        }

        let synthetic_dataset = match &raw.synthetic_dataset {
            Some(s) => {
                if s.count == 0 {
                    return Err(invalid("synthetic_dataset.count", "must be >= 1"));
                }
                let choices = s.choices.unwrap_or(5);
                if task == TaskKind::MultipleChoice && !(2..=26).contains(&choices) {
                    return Err(invalid("synthetic_dataset.choices", "must be in 2..=26"));
                }
                Some(SyntheticDataset {
                    count: s.count,
                    choices,
                })
            }
            None => None,
        };
        match (&raw.dataset, &synthetic_dataset) {
            (None, None) => {
                return Err(invalid("dataset", "provide dataset or [synthetic_dataset]"))
            }
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "dataset",
                    "dataset and [synthetic_dataset] are exclusive",
                ))
            }
            _ => {}
        }

        let mut roster = Vec::with_capacity(raw.agents.len());
        for (position, agent) in raw.agents.iter().enumerate() {
            let field = |name: &str| format!("agents[{position}].{name}");
            let backend = match agent.backend.as_str() {
                "http_chat" => BackendKind::HttpChat {
                    model: agent
                        .model
                        .clone()
                        .ok_or_else(|| invalid(&field("model"), "required for http_chat"))?,
                    endpoint: agent
                        .endpoint
                        .clone()
                        .ok_or_else(|| invalid(&field("endpoint"), "required for http_chat"))?,
                },
                "scripted" => BackendKind::Scripted {
                    fixture: agent
                        .fixture
                        .clone()
                        .ok_or_else(|| invalid(&field("fixture"), "required for scripted"))?,
                },
                "synthetic" => {
                    let get = |name: &str, value: Option<f64>| -> Result<f64, ConfigError> {
                        let v =
                            value.ok_or_else(|| invalid(&field(name), "required for synthetic"))?;
                        if !(0.0..=1.0).contains(&v) {
                            return Err(invalid(&field(name), "must lie in [0, 1]"));
                        }
                        Ok(v)
                    };
                    BackendKind::Synthetic {
                        p_correct: get("p_correct", agent.p_correct)?,
                        sycophancy: get("sycophancy", agent.sycophancy)?,
                        revise_prob: get("revise_prob", agent.revise_prob)?,
                    }
                }
                other => {
                    return Err(invalid(
                        "backend",
                        format!(
                            "agent {:?}: unknown backend kind {other:?} \
                             (expected http_chat, scripted, or synthetic)",
                            agent.id
                        ),
                    ))
                }
            };
            let mut params = GenerationParams::default();
            if let Some(t) = agent.temperature {
                params.temperature = Some(t);
            }
            if let Some(p) = agent.top_p {
                params.top_p = p;
            }
            if let Some(m) = agent.max_tokens {
                params.max_tokens = m;
            }
            roster.push(AgentSpec {
                agent_id: agent.id.clone(),
                backend,
                params,
                position,
            });
        }

        let mut prompts = PromptSet::default_for(task);
        if let Some(raw_prompts) = &raw.prompts {
            if let Some(t) = &raw_prompts.task_prompt_template {
                prompts.task_prompt_template = t.clone();
            }
            if let Some(t) = &raw_prompts.debate_prompt_template {
                prompts.debate_prompt_template = t.clone();
            }
            if let Some(t) = &raw_prompts.summarize_prompt_template {
                prompts.summarize_prompt_template = t.clone();
            }
        }

        let label = raw.label.clone().unwrap_or_else(|| default_label(&roster));
        let config = ExperimentConfig {
            task,
            label,
            run_id: raw.run_id.clone(),
            dataset: raw.dataset.clone(),
            synthetic_dataset,
            sample_n: raw.sample_n,
            seeds: raw.seeds.clone(),
            rounds,
            parallel,
            context_char_budget: raw
                .context_char_budget
                .unwrap_or(DEFAULT_CONTEXT_CHAR_BUDGET),
            tolerance: raw.tolerance.unwrap_or(0.0),
            resample_per_seed: raw.resample_per_seed.unwrap_or(true),
            runs_dir: raw
                .runs_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs")),
            http_max_inflight: raw.http_max_inflight,
            prompts,
            roster,
            source_text,
        };
        if config.tolerance < 0.0 {
            return Err(invalid("tolerance", "must be >= 0"));
        }
        config
            .debate_config()
            .validate()
            .map_err(|e| invalid("agents", e.to_string()))?;
        Ok(config)
    }

    /// The per-question debate configuration this experiment uses.
    pub fn debate_config(&self) -> DebateConfig {
        DebateConfig {
            rounds: self.rounds,
            roster: self.roster.clone(),
            prompts: self.prompts.clone(),
            context_char_budget: self.context_char_budget,
        }
    }

    pub fn is_offline(&self) -> bool {
        self.roster
            .iter()
            .all(|a| !matches!(a.backend, BackendKind::HttpChat { .. }))
    }
}

fn default_label(roster: &[AgentSpec]) -> String {
    let mut groups: Vec<(String, usize)> = Vec::new();
    for spec in roster {
        let name = match &spec.backend {
            BackendKind::HttpChat { model, .. } => model.clone(),
            BackendKind::Scripted { .. } => "scripted".to_string(),
            BackendKind::Synthetic {
                p_correct,
                sycophancy,
                ..
            } => {
                format!("syn(p={p_correct},s={sycophancy})")
            }
        };
        match groups.last_mut() {
            Some((n, count)) if *n == name => *count += 1,
            _ => groups.push((name, 1)),
        }
    }
    groups
        .iter()
        .map(|(name, count)| format!("{count}x {name}"))
        .collect::<Vec<_>>()
        .join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTHETIC_CONFIG: &str = r#"
task = "multiple_choice"
seeds = [1, 2, 3, 4, 5]
rounds = 2

[synthetic_dataset]
count = 100
choices = 5

[[agents]]
id = "strong"
backend = "synthetic"
p_correct = 0.9
sycophancy = 0.8
revise_prob = 0.1

[[agents]]
id = "weak-1"
backend = "synthetic"
p_correct = 0.3
sycophancy = 0.8
revise_prob = 0.1

[[agents]]
id = "weak-2"
backend = "synthetic"
p_correct = 0.3
sycophancy = 0.8
revise_prob = 0.1
"#;

    #[test]
    fn synthetic_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(SYNTHETIC_CONFIG).unwrap();
        assert_eq!(cfg.rounds, 2);
        assert_eq!(cfg.parallel, 4);
        assert_eq!(cfg.tolerance, 0.0);
        assert_eq!(cfg.roster.len(), 3);
        assert_eq!(cfg.roster[1].position, 1);
        assert_eq!(cfg.roster[0].params.top_p, 0.9);
        assert_eq!(cfg.roster[0].params.max_tokens, 2048);
        assert_eq!(cfg.roster[0].params.temperature, None);
        assert!(cfg.is_offline());
        assert_eq!(cfg.label, "1x syn(p=0.9,s=0.8) + 2x syn(p=0.3,s=0.8)");
        assert!(cfg.debate_config().validate().is_ok());
    }

    #[test]
    fn unknown_backend_kind_is_a_backend_error() {
        let text = SYNTHETIC_CONFIG.replace("backend = \"synthetic\"", "backend = \"quantum\"");
        match ExperimentConfig::from_toml(&text).unwrap_err() {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "backend"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn http_agent_requires_model_and_endpoint() {
        let text = r#"
task = "open_numeric"
dataset = "data/gsm8k.jsonl"
seeds = [1]

[[agents]]
id = "live"
backend = "http_chat"
model = "test-model"
"#;
        match ExperimentConfig::from_toml(text).unwrap_err() {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "agents[0].endpoint"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn dataset_sources_are_exclusive_and_required() {
        let missing = r#"
task = "multiple_choice"
seeds = [1]

[[agents]]
id = "a"
backend = "synthetic"
p_correct = 1.0
sycophancy = 0.0
revise_prob = 0.0
"#;
        assert!(matches!(
            ExperimentConfig::from_toml(missing),
            Err(ConfigError::Invalid { .. })
        ));
        let both = format!("{SYNTHETIC_CONFIG}\ndataset = \"x.jsonl\"\n");
        assert!(ExperimentConfig::from_toml(&both).is_err());
    }

    #[test]
    fn probability_bounds_checked_per_field() {
        let text = SYNTHETIC_CONFIG.replace("sycophancy = 0.8", "sycophancy = 1.8");
        match ExperimentConfig::from_toml(&text).unwrap_err() {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "agents[0].sycophancy"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn unknown_top_level_keys_are_rejected() {
        let text = format!("{SYNTHETIC_CONFIG}\nmystery_flag = true\n");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(ConfigError::Toml(_))
        ));
    }

    #[test]
    fn prompt_overrides_are_validated() {
        let text =
            format!("{SYNTHETIC_CONFIG}\n[prompts]\ndebate_prompt_template = \"no placeholder\"\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
