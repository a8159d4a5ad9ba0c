//! Executes experiments end to end: per seed, sample questions, run debates
//! in parallel, persist transcripts and summaries, then aggregate across
//! seeds.
//!
//! Results are byte-identical for identical config + seeds regardless of
//! thread scheduling: per-question RNG seeds derive from (seed, question
//! id) alone, transcripts are written sorted by sampled index, and failures
//! are logged in index order. Runs are resumable: completed questions are
//! checkpointed and skipped on re-invocation, and a completed seed is never
//! re-executed.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::agents::{OfflineProvider, ReplayFixtures, SessionProvider};
use crate::answer::Answer;
use crate::config::{ConfigError, ExperimentConfig};
use crate::data::{self, DataError};
use crate::engine::{run_debate, EngineError};
use crate::metrics::{aggregate, summarize_run, AggregateSummary, MetricsError, RunSummary};
use crate::rng::{derive_seed, fnv1a64};
use crate::store::{FailureRecord, RunStore, StoreError, StoredAggregate};
use crate::types::{BackendKind, Question};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("fatal engine error: {0}")]
    Engine(String),
    #[error("seed {seed}: every question failed; backend appears unusable")]
    AllQuestionsFailed { seed: u64 },
    #[error("roster needs live http backends, which this build does not include")]
    HttpUnavailable,
    #[error("cannot read fixture {path}: {detail}")]
    Fixture { path: String, detail: String },
}

/// Everything `run` produces, ready for printing and assertions.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub label: String,
    pub seed_summaries: Vec<(u64, RunSummary)>,
    pub aggregate: AggregateSummary,
    pub failed_questions: usize,
}

/// Picks the configured run id or derives a timestamped one.
pub fn resolve_run_id(config: &ExperimentConfig) -> String {
    if let Some(id) = &config.run_id {
        return id.clone();
    }
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "run-{now}-{:08x}",
        fnv1a64(config.source_text.as_bytes()) as u32
    )
}

/// Builds the session provider a config needs, loading every scripted
/// fixture file once. Fails if the roster needs http backends and the
/// `http` feature is absent.
pub fn build_provider(config: &ExperimentConfig) -> Result<Box<dyn SessionProvider>, RunError> {
    let mut offline = OfflineProvider::new();
    let mut loaded: Vec<String> = Vec::new();
    for spec in &config.roster {
        if let BackendKind::Scripted { fixture } = &spec.backend {
            if !loaded.contains(fixture) {
                let fixtures =
                    ReplayFixtures::load(std::path::Path::new(fixture)).map_err(|e| {
                        RunError::Fixture {
                            path: fixture.clone(),
                            detail: e.to_string(),
                        }
                    })?;
                offline = offline.with_fixtures(fixture.clone(), fixtures);
                loaded.push(fixture.clone());
            }
        }
    }
    if config.is_offline() {
        return Ok(Box::new(offline));
    }
    #[cfg(feature = "http")]
    {
        // The in-flight cap defaults to the debate parallelism, keeping a
        // hard bound on concurrent requests even if workers change.
        let backend = crate::agents::HttpBackend::from_env(
            crate::agents::RetryPolicy::default(),
            Some(config.http_max_inflight.unwrap_or(config.parallel)),
        );
        Ok(Box::new(crate::agents::LiveProvider::new(backend, offline)))
    }
    #[cfg(not(feature = "http"))]
    Err(RunError::HttpUnavailable)
}

/// Loads the question population a config draws from.
pub fn load_population(config: &ExperimentConfig) -> Result<Vec<Question>, RunError> {
    if let Some(path) = &config.dataset {
        return Ok(data::load_dataset(path, config.task)?);
    }
    let synth = config
        .synthetic_dataset
        .expect("validated: dataset or synthetic");
    Ok(data::synthetic_questions(
        synth.count,
        config.task,
        synth.choices,
    ))
}

/// Runs (or resumes) a whole experiment and persists every artifact.
pub fn execute_run(
    config: &ExperimentConfig,
    provider: &dyn SessionProvider,
    run_id: &str,
) -> Result<RunOutcome, RunError> {
    let store = RunStore::new(&config.runs_dir);
    store.create_run(run_id, &config.source_text)?;
    let population = load_population(config)?;
    let debate_config = config.debate_config();

    let mut seed_summaries: Vec<(u64, RunSummary)> = Vec::new();
    let mut failed_questions = 0usize;

    for &seed in &config.seeds {
        let sample_seed = if config.resample_per_seed {
            seed
        } else {
            config.seeds[0]
        };
        let n = config.sample_n.unwrap_or(population.len());
        let sampled = data::sample(&population, n, sample_seed)?;
        store.write_questions(run_id, seed, &sampled)?;

        let transcripts = if store.transcripts_exist(run_id, seed) {
            store.read_transcripts(run_id, seed)?
        } else {
            let done: BTreeMap<usize, _> = store.read_partial(run_id, seed)?.into_iter().collect();
            let pending: Vec<usize> = (0..sampled.len())
                .filter(|i| !done.contains_key(i))
                .collect();

            let results: Mutex<Vec<(usize, Result<crate::types::Transcript, EngineError>)>> =
                Mutex::new(Vec::with_capacity(pending.len()));
            let cursor = AtomicUsize::new(0);
            let workers = config.parallel.min(pending.len()).max(1);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let slot = cursor.fetch_add(1, Ordering::Relaxed);
                        let Some(&index) = pending.get(slot) else {
                            break;
                        };
                        let question = &sampled[index];
                        let question_seed = derive_seed(seed, &[fnv1a64(question.id.as_bytes())]);
                        let outcome = run_debate(question, &debate_config, question_seed, provider);
                        if let Ok(transcript) = &outcome {
                            // Checkpoint immediately; order within the file
                            // is irrelevant (the final file is sorted).
                            let _ = store.append_partial(run_id, seed, index, transcript);
                        }
                        results.lock().unwrap().push((index, outcome));
                    });
                }
            });

            let mut completed: BTreeMap<usize, crate::types::Transcript> = done;
            let mut failures: Vec<FailureRecord> = Vec::new();
            for (index, outcome) in results.into_inner().unwrap() {
                match outcome {
                    Ok(transcript) => {
                        completed.insert(index, transcript);
                    }
                    Err(EngineError::QuestionFailed { .. }) => {
                        failures.push(FailureRecord {
                            seed,
                            question_index: index,
                            question_id: sampled[index].id.clone(),
                            error: outcome.unwrap_err().to_string(),
                        });
                    }
                    Err(fatal) => return Err(RunError::Engine(fatal.to_string())),
                }
            }
            failures.sort_by_key(|f| f.question_index);
            store.append_failures(run_id, &failures)?;

            let ordered: Vec<crate::types::Transcript> = completed.into_values().collect();
            store.write_transcripts(run_id, seed, &ordered)?;
            store.clear_partial(run_id, seed)?;
            ordered
        };

        if transcripts.is_empty() {
            return Err(RunError::AllQuestionsFailed { seed });
        }
        // Same accounting whether the seed just ran or was reloaded, so a
        // re-invocation reports failures (and exit status) identically.
        failed_questions += sampled.len() - transcripts.len();
        let truths: BTreeMap<String, Answer> = sampled
            .iter()
            .map(|q| (q.id.clone(), q.ground_truth.clone()))
            .collect();
        let summary = summarize_run(
            &transcripts,
            &truths,
            config.tolerance,
            sampled.len() - transcripts.len(),
        )?;
        store.write_summary(run_id, seed, &summary)?;
        seed_summaries.push((seed, summary));
    }

    let summaries: Vec<RunSummary> = seed_summaries.iter().map(|(_, s)| s.clone()).collect();
    let aggregate = aggregate(&summaries)?;
    store.write_aggregate(
        run_id,
        &StoredAggregate {
            label: config.label.clone(),
            summary: aggregate.clone(),
        },
    )?;

    Ok(RunOutcome {
        run_id: run_id.to_string(),
        label: config.label.clone(),
        seed_summaries,
        aggregate,
        failed_questions,
    })
}

/// Recomputes a run's summaries purely from its stored questions and
/// transcripts. `report` uses this so every table is a function of the run
/// directory, not of what was printed at run time.
pub fn recompute_outcome(store: &RunStore, run_id: &str) -> Result<RunOutcome, RunError> {
    let config_text = store.read_config_text(run_id)?;
    let config = ExperimentConfig::from_toml(&config_text)?;
    let mut seed_summaries: Vec<(u64, RunSummary)> = Vec::new();
    let mut failed_questions = 0usize;
    for &seed in &config.seeds {
        if !store.transcripts_exist(run_id, seed) {
            return Err(StoreError::IncompleteRun {
                run_id: run_id.to_string(),
                detail: format!("seed {seed} has no transcripts"),
            }
            .into());
        }
        let questions = store.read_questions(run_id, seed, config.task)?;
        let transcripts = store.read_transcripts(run_id, seed)?;
        let truths: BTreeMap<String, Answer> = questions
            .iter()
            .map(|q| (q.id.clone(), q.ground_truth.clone()))
            .collect();
        let n_failed = questions.len() - transcripts.len();
        failed_questions += n_failed;
        let summary = summarize_run(&transcripts, &truths, config.tolerance, n_failed)?;
        seed_summaries.push((seed, summary));
    }
    let summaries: Vec<RunSummary> = seed_summaries.iter().map(|(_, s)| s.clone()).collect();
    let aggregate = aggregate(&summaries)?;
    Ok(RunOutcome {
        run_id: run_id.to_string(),
        label: config.label.clone(),
        seed_summaries,
        aggregate,
        failed_questions,
    })
}
