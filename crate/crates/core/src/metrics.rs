//! Quantitative surfaces of a run: accuracy, debate deltas, per-round
//! series, answer-transition counts, and seed aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::Answer;
use crate::types::Transcript;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("predictions and truths differ in length ({preds} vs {truths})")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("metric over empty input")]
    EmptyInput,
    #[error("summaries disagree in shape: {0}")]
    ShapeMismatch(String),
    #[error("transcript {0} references a question with no known ground truth")]
    UnknownQuestion(String),
}

/// How agent answers move between consecutive rounds, classified against
/// ground truth. Pairs with an abstain on either side are tracked separately
/// rather than forced into the four classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub cc: u64,
    pub ci: u64,
    pub ic: u64,
    pub ii: u64,
    pub abst_involved: u64,
}

impl TransitionCounts {
    pub fn total(&self) -> u64 {
        self.cc + self.ci + self.ic + self.ii + self.abst_involved
    }

    pub fn add(&mut self, other: &TransitionCounts) {
        self.cc += other.cc;
        self.ci += other.ci;
        self.ic += other.ic;
        self.ii += other.ii;
        self.abst_involved += other.abst_involved;
    }

    fn record(&mut self, prev: &Answer, next: &Answer, truth: &Answer, tolerance: f64) {
        if prev.is_abstain() || next.is_abstain() {
            self.abst_involved += 1;
            return;
        }
        match (
            prev.matches(truth, tolerance),
            next.matches(truth, tolerance),
        ) {
            (true, true) => self.cc += 1,
            (true, false) => self.ci += 1,
            (false, true) => self.ic += 1,
            (false, false) => self.ii += 1,
        }
    }
}

/// Per-round-pair transition counts for one transcript, index 0 covering
/// rounds 1→2. Empty for T = 1.
pub fn transitions_per_pair(
    transcript: &Transcript,
    truth: &Answer,
    tolerance: f64,
) -> Vec<TransitionCounts> {
    let rounds = &transcript.rounds;
    let mut pairs = Vec::new();
    for window in rounds.windows(2) {
        let mut counts = TransitionCounts::default();
        for (prev_gen, next_gen) in window[0].generations.iter().zip(&window[1].generations) {
            counts.record(&prev_gen.extracted, &next_gen.extracted, truth, tolerance);
        }
        pairs.push(counts);
    }
    pairs
}

/// Transition counts for one transcript combined over all round pairs.
/// All-zero for T = 1.
pub fn transitions(transcript: &Transcript, truth: &Answer) -> TransitionCounts {
    let mut combined = TransitionCounts::default();
    for pair in transitions_per_pair(transcript, truth, 0.0) {
        combined.add(&pair);
    }
    combined
}

/// Fraction of positions where the prediction matches the truth exactly.
/// Abstain never matches.
pub fn accuracy(predictions: &[Answer], truths: &[Answer]) -> Result<f64, MetricsError> {
    accuracy_with_tolerance(predictions, truths, 0.0)
}

pub fn accuracy_with_tolerance(
    predictions: &[Answer],
    truths: &[Answer],
    tolerance: f64,
) -> Result<f64, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p.matches(t, tolerance))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// All metrics of one seed's run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rounds: u32,
    pub n_agents: usize,
    pub n_questions: usize,
    /// Questions dropped because a backend failed after retries; excluded
    /// from every denominator above.
    pub n_failed: usize,
    /// Majority-vote accuracy per round (primary series).
    pub per_round_accuracy: Vec<f64>,
    /// Mean per-agent accuracy per round (auxiliary series).
    pub per_round_agent_accuracy: Vec<f64>,
    /// Round-1 majority accuracy: ensemble voting with no exchange of reasoning.
    pub wo_debate: f64,
    /// Round-T majority accuracy.
    pub after_debate: f64,
    /// after_debate - wo_debate; negative means debate degraded the group.
    pub delta: f64,
    pub transitions_per_pair: Vec<TransitionCounts>,
    pub transitions_combined: TransitionCounts,
    /// Fraction of questions whose final-round vote was flagged as a tie.
    pub tie_rate: f64,
    /// Abstaining generations over all N x T x |Q| generations.
    pub abstention_rate: f64,
}

/// Computes a [`RunSummary`] from completed transcripts and the ground
/// truths they were debated against.
pub fn summarize_run(
    transcripts: &[Transcript],
    truths: &BTreeMap<String, Answer>,
    tolerance: f64,
    n_failed: usize,
) -> Result<RunSummary, MetricsError> {
    if transcripts.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let rounds = transcripts[0].rounds.len() as u32;
    let n_agents = transcripts[0].rounds[0].generations.len();
    let n_questions = transcripts.len();

    let mut per_round_hits = vec![0usize; rounds as usize];
    let mut per_round_agent_hits = vec![0usize; rounds as usize];
    let mut pair_counts = vec![TransitionCounts::default(); rounds.saturating_sub(1) as usize];
    let mut ties = 0usize;
    let mut abstentions = 0usize;

    for transcript in transcripts {
        if transcript.rounds.len() as u32 != rounds
            || transcript
                .rounds
                .iter()
                .any(|r| r.generations.len() != n_agents)
        {
            return Err(MetricsError::ShapeMismatch(format!(
                "transcript {} has irregular shape",
                transcript.question_id
            )));
        }
        let truth = truths
            .get(&transcript.question_id)
            .ok_or_else(|| MetricsError::UnknownQuestion(transcript.question_id.clone()))?;
        for (idx, outcome) in transcript.per_round_majority.iter().enumerate() {
            if outcome.answer.matches(truth, tolerance) {
                per_round_hits[idx] += 1;
            }
        }
        if transcript.per_round_majority.last().is_some_and(|o| o.tie) {
            ties += 1;
        }
        for (idx, record) in transcript.rounds.iter().enumerate() {
            for generation in &record.generations {
                if generation.extracted.matches(truth, tolerance) {
                    per_round_agent_hits[idx] += 1;
                }
                if generation.extracted.is_abstain() {
                    abstentions += 1;
                }
            }
        }
        for (idx, pair) in transitions_per_pair(transcript, truth, tolerance)
            .iter()
            .enumerate()
        {
            pair_counts[idx].add(pair);
        }
    }

    let per_round_accuracy: Vec<f64> = per_round_hits
        .iter()
        .map(|h| *h as f64 / n_questions as f64)
        .collect();
    let per_round_agent_accuracy: Vec<f64> = per_round_agent_hits
        .iter()
        .map(|h| *h as f64 / (n_questions * n_agents) as f64)
        .collect();
    let mut transitions_combined = TransitionCounts::default();
    for pair in &pair_counts {
        transitions_combined.add(pair);
    }
    let wo_debate = per_round_accuracy[0];
    let after_debate = *per_round_accuracy.last().unwrap();

    Ok(RunSummary {
        rounds,
        n_agents,
        n_questions,
        n_failed,
        wo_debate,
        after_debate,
        delta: after_debate - wo_debate,
        per_round_accuracy,
        per_round_agent_accuracy,
        transitions_per_pair: pair_counts,
        transitions_combined,
        tie_rate: ties as f64 / n_questions as f64,
        abstention_rate: abstentions as f64 / (n_questions * n_agents * rounds as usize) as f64,
    })
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Mean and standard error of the mean. The SE uses the k-1 sample-variance
/// convention and is 0 for a single value.
pub fn mean_se(values: &[f64]) -> MeanSe {
    let k = values.len();
    assert!(k > 0, "mean_se over empty slice");
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    MeanSe {
        mean,
        se: (var / k as f64).sqrt(),
    }
}

/// Field-wise mean and standard error over per-seed summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub seed_count: usize,
    pub rounds: u32,
    pub n_agents: usize,
    pub wo_debate: MeanSe,
    pub after_debate: MeanSe,
    pub delta: MeanSe,
    pub per_round_accuracy: Vec<MeanSe>,
    pub per_round_agent_accuracy: Vec<MeanSe>,
    pub tie_rate: MeanSe,
    pub abstention_rate: MeanSe,
    pub transitions_cc: MeanSe,
    pub transitions_ci: MeanSe,
    pub transitions_ic: MeanSe,
    pub transitions_ii: MeanSe,
    pub transitions_abst: MeanSe,
}

/// Aggregates per-seed summaries field-wise. All summaries must share the
/// same round count and roster size.
pub fn aggregate(summaries: &[RunSummary]) -> Result<AggregateSummary, MetricsError> {
    let first = summaries.first().ok_or(MetricsError::EmptyInput)?;
    for s in summaries {
        if s.rounds != first.rounds || s.n_agents != first.n_agents {
            return Err(MetricsError::ShapeMismatch(format!(
                "expected T={} N={}, found T={} N={}",
                first.rounds, first.n_agents, s.rounds, s.n_agents
            )));
        }
    }
    let field =
        |f: &dyn Fn(&RunSummary) -> f64| mean_se(&summaries.iter().map(f).collect::<Vec<_>>());
    let round_series = |f: &dyn Fn(&RunSummary) -> &Vec<f64>| {
        (0..first.rounds as usize)
            .map(|idx| mean_se(&summaries.iter().map(|s| f(s)[idx]).collect::<Vec<_>>()))
            .collect::<Vec<_>>()
    };
    Ok(AggregateSummary {
        seed_count: summaries.len(),
        rounds: first.rounds,
        n_agents: first.n_agents,
        wo_debate: field(&|s| s.wo_debate),
        after_debate: field(&|s| s.after_debate),
        delta: field(&|s| s.delta),
        per_round_accuracy: round_series(&|s| &s.per_round_accuracy),
        per_round_agent_accuracy: round_series(&|s| &s.per_round_agent_accuracy),
        tie_rate: field(&|s| s.tie_rate),
        abstention_rate: field(&|s| s.abstention_rate),
        transitions_cc: field(&|s| s.transitions_combined.cc as f64),
        transitions_ci: field(&|s| s.transitions_combined.ci as f64),
        transitions_ic: field(&|s| s.transitions_combined.ic as f64),
        transitions_ii: field(&|s| s.transitions_combined.ii as f64),
        transitions_abst: field(&|s| s.transitions_combined.abst_involved as f64),
    })
}

/// Renders the debate delta between two accuracy percentages the way result
/// tables annotate it: a down arrow for degradation, an up arrow for
/// improvement, an em dash when equal, always to one decimal.
pub fn format_delta(wo_pct: f64, after_pct: f64) -> String {
    if after_pct < wo_pct {
        format!("\u{2193} {:.1}", wo_pct - after_pct)
    } else if after_pct > wo_pct {
        format!("\u{2191} {:.1}", after_pct - wo_pct)
    } else {
        "\u{2014} 0.0".to_string()
    }
}
