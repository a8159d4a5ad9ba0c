//! Persistent run storage and report rendering.
//!
//! Run directory layout (stable):
//!
//! ```text
//! runs/{run_id}/
//!   config.toml                      resolved experiment config
//!   questions/seed-{seed}.jsonl      the questions sampled for that seed
//!   transcripts/seed-{seed}.jsonl    one transcript per line, raw texts included
//!   transcripts/seed-{seed}.partial.jsonl   in-progress checkpoint (removed on completion)
//!   summary/seed-{seed}.json         per-seed RunSummary
//!   summary/aggregate.json           seed-aggregated summary + roster label
//!   log.jsonl                        question-level failures
//!   report/                          tables and CSVs emitted by `report`
//! ```
//!
//! Raw model texts are always persisted; they are the primary record, and
//! extraction can be re-run offline against them. Everything a report needs
//! is re-derivable from `questions/` + `transcripts/` alone.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data;
use crate::metrics::{format_delta, AggregateSummary, RunSummary, TransitionCounts};
use crate::types::{Question, TaskKind, Transcript};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: corrupt record: {detail}")]
    CorruptRecord {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("run {0} not found")]
    RunNotFound(String),
    #[error("run {run_id} is incomplete: {detail}")]
    IncompleteRun { run_id: String, detail: String },
    #[error(transparent)]
    Data(#[from] data::DataError),
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One failed question in the run log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub seed: u64,
    pub question_index: usize,
    pub question_id: String,
    pub error: String,
}

/// Aggregate summary together with its human-readable roster label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredAggregate {
    pub label: String,
    pub summary: AggregateSummary,
}

/// Handle on a directory of runs.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join(run_id)
    }

    pub fn run_exists(&self, run_id: &str) -> bool {
        self.run_dir(run_id).join("config.toml").is_file()
    }

    /// Creates (or re-opens for resumption) a run directory. A fresh run
    /// writes the config; a resumed run must present the identical config.
    pub fn create_run(&self, run_id: &str, config_text: &str) -> Result<(), StoreError> {
        let dir = self.run_dir(run_id);
        fs::create_dir_all(dir.join("questions")).map_err(|e| io_err(&dir, e))?;
        fs::create_dir_all(dir.join("transcripts")).map_err(|e| io_err(&dir, e))?;
        fs::create_dir_all(dir.join("summary")).map_err(|e| io_err(&dir, e))?;
        let config_path = dir.join("config.toml");
        if config_path.is_file() {
            let existing = fs::read_to_string(&config_path).map_err(|e| io_err(&config_path, e))?;
            if existing != config_text {
                return Err(StoreError::IncompleteRun {
                    run_id: run_id.to_string(),
                    detail: "existing run has a different config; pick a new run id".into(),
                });
            }
            return Ok(());
        }
        write_atomic(&config_path, config_text)
    }

    pub fn read_config_text(&self, run_id: &str) -> Result<String, StoreError> {
        let path = self.run_dir(run_id).join("config.toml");
        if !path.is_file() {
            return Err(StoreError::RunNotFound(run_id.to_string()));
        }
        fs::read_to_string(&path).map_err(|e| io_err(&path, e))
    }

    fn questions_path(&self, run_id: &str, seed: u64) -> PathBuf {
        self.run_dir(run_id)
            .join("questions")
            .join(format!("seed-{seed}.jsonl"))
    }

    pub fn write_questions(
        &self,
        run_id: &str,
        seed: u64,
        questions: &[Question],
    ) -> Result<(), StoreError> {
        write_atomic(
            &self.questions_path(run_id, seed),
            &data::dataset_to_string(questions),
        )
    }

    pub fn read_questions(
        &self,
        run_id: &str,
        seed: u64,
        task: TaskKind,
    ) -> Result<Vec<Question>, StoreError> {
        Ok(data::load_dataset(
            &self.questions_path(run_id, seed),
            task,
        )?)
    }

    fn transcripts_path(&self, run_id: &str, seed: u64) -> PathBuf {
        self.run_dir(run_id)
            .join("transcripts")
            .join(format!("seed-{seed}.jsonl"))
    }

    fn partial_path(&self, run_id: &str, seed: u64) -> PathBuf {
        self.run_dir(run_id)
            .join("transcripts")
            .join(format!("seed-{seed}.partial.jsonl"))
    }

    pub fn transcripts_exist(&self, run_id: &str, seed: u64) -> bool {
        self.transcripts_path(run_id, seed).is_file()
    }

    /// Writes a seed's completed transcripts, one JSON object per line.
    pub fn write_transcripts(
        &self,
        run_id: &str,
        seed: u64,
        transcripts: &[Transcript],
    ) -> Result<(), StoreError> {
        let mut out = String::new();
        for t in transcripts {
            out.push_str(&serde_json::to_string(t).expect("transcript serializes"));
            out.push('\n');
        }
        write_atomic(&self.transcripts_path(run_id, seed), &out)
    }

    /// Exact inverse of [`RunStore::write_transcripts`]. Truncated or malformed lines
    /// (including a final line missing its newline) surface as
    /// `CorruptRecord` with the line number.
    pub fn read_transcripts(&self, run_id: &str, seed: u64) -> Result<Vec<Transcript>, StoreError> {
        let path = self.transcripts_path(run_id, seed);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let mut transcripts = Vec::new();
        if text.is_empty() {
            return Ok(transcripts);
        }
        if !text.ends_with('\n') {
            let line = text.lines().count();
            return Err(StoreError::CorruptRecord {
                path: path.display().to_string(),
                line,
                detail: "truncated final line".into(),
            });
        }
        for (idx, line) in text.lines().enumerate() {
            let t: Transcript =
                serde_json::from_str(line).map_err(|e| StoreError::CorruptRecord {
                    path: path.display().to_string(),
                    line: idx + 1,
                    detail: e.to_string(),
                })?;
            transcripts.push(t);
        }
        Ok(transcripts)
    }

    /// Appends one completed question to the seed's checkpoint file.
    pub fn append_partial(
        &self,
        run_id: &str,
        seed: u64,
        index: usize,
        transcript: &Transcript,
    ) -> Result<(), StoreError> {
        let path = self.partial_path(run_id, seed);
        let record = PartialRecord {
            index,
            transcript: transcript.clone(),
        };
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        file.write_all(line.as_bytes())
            .map_err(|e| io_err(&path, e))
    }

    /// Loads the checkpoint. A truncated trailing line (interrupted append)
    /// is dropped; corruption elsewhere is an error.
    pub fn read_partial(
        &self,
        run_id: &str,
        seed: u64,
    ) -> Result<Vec<(usize, Transcript)>, StoreError> {
        let path = self.partial_path(run_id, seed);
        if !path.is_file() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let mut records = Vec::new();
        let lines: Vec<&str> = text.lines().collect();
        let complete = text.ends_with('\n');
        for (idx, line) in lines.iter().enumerate() {
            match serde_json::from_str::<PartialRecord>(line) {
                Ok(r) => records.push((r.index, r.transcript)),
                Err(e) => {
                    if idx + 1 == lines.len() && !complete {
                        break; // torn final append
                    }
                    return Err(StoreError::CorruptRecord {
                        path: path.display().to_string(),
                        line: idx + 1,
                        detail: e.to_string(),
                    });
                }
            }
        }
        Ok(records)
    }

    pub fn clear_partial(&self, run_id: &str, seed: u64) -> Result<(), StoreError> {
        let path = self.partial_path(run_id, seed);
        if path.is_file() {
            fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }

    fn summary_path(&self, run_id: &str, seed: u64) -> PathBuf {
        self.run_dir(run_id)
            .join("summary")
            .join(format!("seed-{seed}.json"))
    }

    pub fn write_summary(
        &self,
        run_id: &str,
        seed: u64,
        summary: &RunSummary,
    ) -> Result<(), StoreError> {
        let text = serde_json::to_string_pretty(summary).expect("summary serializes");
        write_atomic(&self.summary_path(run_id, seed), &text)
    }

    pub fn read_summary(&self, run_id: &str, seed: u64) -> Result<RunSummary, StoreError> {
        let path = self.summary_path(run_id, seed);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        serde_json::from_str(&text).map_err(|e| StoreError::CorruptRecord {
            path: path.display().to_string(),
            line: 1,
            detail: e.to_string(),
        })
    }

    pub fn write_aggregate(
        &self,
        run_id: &str,
        aggregate: &StoredAggregate,
    ) -> Result<(), StoreError> {
        let text = serde_json::to_string_pretty(aggregate).expect("aggregate serializes");
        write_atomic(
            &self.run_dir(run_id).join("summary").join("aggregate.json"),
            &text,
        )
    }

    pub fn read_aggregate(&self, run_id: &str) -> Result<StoredAggregate, StoreError> {
        let path = self.run_dir(run_id).join("summary").join("aggregate.json");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        serde_json::from_str(&text).map_err(|e| StoreError::CorruptRecord {
            path: path.display().to_string(),
            line: 1,
            detail: e.to_string(),
        })
    }

    /// Appends failure records (pre-sorted by the caller) to the run log.
    pub fn append_failures(
        &self,
        run_id: &str,
        failures: &[FailureRecord],
    ) -> Result<(), StoreError> {
        if failures.is_empty() {
            return Ok(());
        }
        let path = self.run_dir(run_id).join("log.jsonl");
        let mut out = String::new();
        for f in failures {
            out.push_str(&serde_json::to_string(f).expect("failure serializes"));
            out.push('\n');
        }
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| io_err(&path, e))
    }

    /// Writes a rendered report artifact under `report/`.
    pub fn write_report_file(
        &self,
        run_id: &str,
        name: &str,
        text: &str,
    ) -> Result<PathBuf, StoreError> {
        let dir = self.run_dir(run_id).join("report");
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let path = dir.join(name);
        write_atomic(&path, text)?;
        Ok(path)
    }
}

#[derive(Serialize, Deserialize)]
struct PartialRecord {
    index: usize,
    transcript: Transcript,
}

fn write_atomic(path: &Path, text: &str) -> Result<(), StoreError> {
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

// --- report rendering ----------------------------------------------------

fn pct(v: f64) -> f64 {
    v * 100.0
}

/// "44.4±2.7" style cell from a proportion-valued mean/se pair.
fn mean_se_cell(m: &crate::metrics::MeanSe) -> String {
    format!("{:.1}\u{b1}{:.1}", pct(m.mean), pct(m.se))
}

/// Renders the results table: one row per roster configuration with
/// mean±SE accuracy without and after debate and the delta annotation.
pub fn render_results_table(rows: &[(String, AggregateSummary)]) -> String {
    let mut label_width = "configuration".len();
    for (label, _) in rows {
        label_width = label_width.max(label.chars().count());
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:label_width$} | {:>10} | {}\n",
        "configuration", "w/o debate", "after debate"
    ));
    out.push_str(&"-".repeat(label_width + 29));
    out.push('\n');
    for (label, agg) in rows {
        let wo = mean_se_cell(&agg.wo_debate);
        let after = mean_se_cell(&agg.after_debate);
        let delta = format_delta(pct(agg.wo_debate.mean), pct(agg.after_debate.mean));
        out.push_str(&format!(
            "{label:label_width$} | {wo:>10} | {after} {delta}\n"
        ));
    }
    out
}

/// The single-row cell content used in the table above, exposed for exact
/// formatting checks: "wo | after delta".
pub fn results_row(agg: &AggregateSummary) -> String {
    format!(
        "{} | {} {}",
        mean_se_cell(&agg.wo_debate),
        mean_se_cell(&agg.after_debate),
        format_delta(pct(agg.wo_debate.mean), pct(agg.after_debate.mean))
    )
}

/// Results table as CSV (percent units).
pub fn results_table_csv(rows: &[(String, AggregateSummary)]) -> String {
    let mut out = String::from(
        "label,seeds,wo_debate_mean,wo_debate_se,after_debate_mean,after_debate_se,delta_mean,tie_rate_mean,abstention_rate_mean\n",
    );
    for (label, agg) in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            csv_escape(label),
            agg.seed_count,
            pct(agg.wo_debate.mean),
            pct(agg.wo_debate.se),
            pct(agg.after_debate.mean),
            pct(agg.after_debate.se),
            pct(agg.delta.mean),
            pct(agg.tie_rate.mean),
            pct(agg.abstention_rate.mean),
        ));
    }
    out
}

/// Accuracy-per-round series as CSV: both the majority-vote series and the
/// mean per-agent series, labeled distinctly.
pub fn per_round_series_csv(rows: &[(String, AggregateSummary)]) -> String {
    let mut out = String::from("label,series,round,accuracy_mean,accuracy_se\n");
    for (label, agg) in rows {
        for (series, values) in [
            ("majority", &agg.per_round_accuracy),
            ("agent_mean", &agg.per_round_agent_accuracy),
        ] {
            for (idx, m) in values.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{:.4},{:.4}\n",
                    csv_escape(label),
                    series,
                    idx + 1,
                    pct(m.mean),
                    pct(m.se),
                ));
            }
        }
    }
    out
}

/// Transition breakdown as CSV: per round pair plus a combined block, with
/// counts summed over seeds. Suitable for external plotting.
pub fn transition_breakdown_csv(rows: &[(String, String, Vec<RunSummary>)]) -> String {
    let mut out = String::from("label,task,round_pair,cc,ci,ic,ii,abstain_involved\n");
    for (label, task, summaries) in rows {
        let pairs = summaries
            .first()
            .map(|s| s.transitions_per_pair.len())
            .unwrap_or(0);
        for pair_idx in 0..pairs {
            let mut total = TransitionCounts::default();
            for s in summaries {
                total.add(&s.transitions_per_pair[pair_idx]);
            }
            out.push_str(&transition_row(
                label,
                task,
                &format!("{}->{}", pair_idx + 1, pair_idx + 2),
                &total,
            ));
        }
        let mut combined = TransitionCounts::default();
        for s in summaries {
            combined.add(&s.transitions_combined);
        }
        out.push_str(&transition_row(label, task, "all", &combined));
    }
    out
}

fn transition_row(label: &str, task: &str, pair: &str, t: &TransitionCounts) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        csv_escape(label),
        csv_escape(task),
        pair,
        t.cc,
        t.ci,
        t.ic,
        t.ii,
        t.abst_involved
    )
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
