//! Exact expected metrics for all-synthetic debates by brute-force
//! enumeration of the joint answer distribution.
//!
//! This is the verification oracle for Monte-Carlo runs: it never touches
//! the engine or the synthetic sessions, only re-states their probability
//! law and integrates it exactly. Answers are tracked as abstract ids
//! 0..C-1 with 0 the correct one; the dynamics are symmetric in the wrong
//! answers' identities, and majority tie-breaking depends on positions, not
//! letters. An `open_numeric` synthetic roster is distribution-identical to
//! `choices = 2` (the wrong mass concentrates on a single value).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::SyntheticParams;
use crate::answer::Answer;
use crate::types::{AgentSpec, BackendKind};
use crate::vote::majority;

/// Enumeration tractability caps.
pub const MAX_AGENTS: usize = 4;
pub const MAX_CHOICES: u32 = 6;
pub const MAX_ROUNDS: u32 = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Synthetic parameters in roster-position order.
    pub agents: Vec<OracleAgent>,
    pub rounds: u32,
    pub choices: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleAgent {
    pub p_correct: f64,
    pub sycophancy: f64,
    pub revise_prob: f64,
}

impl From<SyntheticParams> for OracleAgent {
    fn from(p: SyntheticParams) -> Self {
        Self {
            p_correct: p.p_correct,
            sycophancy: p.sycophancy,
            revise_prob: p.revise_prob,
        }
    }
}

/// Extracts oracle parameters from an all-synthetic roster.
pub fn agents_from_roster(roster: &[AgentSpec]) -> Result<Vec<OracleAgent>, OracleError> {
    let mut ordered: Vec<&AgentSpec> = roster.iter().collect();
    ordered.sort_by_key(|spec| spec.position);
    ordered
        .iter()
        .map(|spec| match &spec.backend {
            BackendKind::Synthetic {
                p_correct,
                sycophancy,
                revise_prob,
            } => Ok(OracleAgent {
                p_correct: *p_correct,
                sycophancy: *sycophancy,
                revise_prob: *revise_prob,
            }),
            other => Err(OracleError::NotSynthetic {
                agent_id: spec.agent_id.clone(),
                kind: other.name(),
            }),
        })
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("invalid oracle parameters: {0}")]
    Invalid(String),
    #[error("agent {agent_id} has backend {kind}; the oracle covers synthetic rosters only")]
    NotSynthetic {
        agent_id: String,
        kind: &'static str,
    },
}

/// Expected transition counts per question (fractional: these are
/// expectations, not tallies).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTransitions {
    pub cc: f64,
    pub ci: f64,
    pub ic: f64,
    pub ii: f64,
}

impl ExpectedTransitions {
    fn add(&mut self, other: &ExpectedTransitions) {
        self.cc += other.cc;
        self.ci += other.ci;
        self.ic += other.ic;
        self.ii += other.ii;
    }
}

/// Exact expected metrics of the synthetic debate process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub rounds: u32,
    pub n_agents: usize,
    pub choices: u32,
    /// Expected majority-vote accuracy per round.
    pub per_round_accuracy: Vec<f64>,
    /// Expected mean per-agent accuracy per round.
    pub per_round_agent_accuracy: Vec<f64>,
    pub wo_debate: f64,
    pub after_debate: f64,
    pub delta: f64,
    /// Expected transitions per question, per consecutive round pair.
    pub transitions_per_pair: Vec<ExpectedTransitions>,
    pub transitions_combined: ExpectedTransitions,
    /// Expected transitions normalized by transition slots (N x (T-1)):
    /// directly comparable with Monte-Carlo counts / (N x (T-1) x |Q|).
    pub ci_rate: f64,
    pub ic_rate: f64,
}

/// Enumerates the full joint outcome distribution of an all-synthetic
/// debate and integrates the run metrics exactly.
pub fn enumerate(config: &OracleConfig) -> Result<OracleReport, OracleError> {
    let n = config.agents.len();
    let c = config.choices as usize;
    let t = config.rounds;
    if n == 0 {
        return Err(OracleError::Invalid("empty roster".into()));
    }
    if c < 2 {
        return Err(OracleError::Invalid("need at least 2 choices".into()));
    }
    if t < 1 {
        return Err(OracleError::Invalid("rounds must be >= 1".into()));
    }
    if n > MAX_AGENTS || config.choices > MAX_CHOICES || t > MAX_ROUNDS {
        return Err(OracleError::TooLarge(format!(
            "caps are N <= {MAX_AGENTS}, choices <= {MAX_CHOICES}, rounds <= {MAX_ROUNDS}; \
             got N = {n}, choices = {}, rounds = {t}",
            config.choices
        )));
    }
    for (idx, agent) in config.agents.iter().enumerate() {
        for (name, v) in [
            ("p_correct", agent.p_correct),
            ("sycophancy", agent.sycophancy),
            ("revise_prob", agent.revise_prob),
        ] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(OracleError::Invalid(format!("agent {idx} {name} = {v}")));
            }
        }
    }

    let n_states = c.pow(n as u32);
    let digits = |state: usize| -> Vec<usize> {
        let mut s = state;
        (0..n)
            .map(|_| {
                let d = s % c;
                s /= c;
                d
            })
            .collect()
    };

    // Independent redraw distribution per agent: index 0 = correct.
    let redraw: Vec<Vec<f64>> = config
        .agents
        .iter()
        .map(|a| {
            let mut d = vec![(1.0 - a.p_correct) / (c as f64 - 1.0); c];
            d[0] = a.p_correct;
            d
        })
        .collect();

    // Round 1: product of independent draws.
    let mut dist = vec![0.0f64; n_states];
    for (state, slot) in dist.iter_mut().enumerate() {
        let ds = digits(state);
        *slot = ds.iter().enumerate().map(|(i, d)| redraw[i][*d]).product();
    }

    let majority_correct = |ds: &[usize]| -> bool {
        let answers: Vec<Answer> = ds
            .iter()
            .map(|d| Answer::choice((b'A' + *d as u8) as char))
            .collect();
        majority(&answers).expect("non-empty").answer == Answer::choice('A')
    };

    let group_accuracy = |dist: &[f64]| -> f64 {
        dist.iter()
            .enumerate()
            .filter(|(state, _)| majority_correct(&digits(*state)))
            .map(|(_, p)| p)
            .sum()
    };
    let agent_accuracy = |dist: &[f64]| -> f64 {
        dist.iter()
            .enumerate()
            .map(|(state, p)| {
                let ds = digits(state);
                p * ds.iter().filter(|d| **d == 0).count() as f64
            })
            .sum::<f64>()
            / n as f64
    };

    let mut per_round_accuracy = vec![group_accuracy(&dist)];
    let mut per_round_agent_accuracy = vec![agent_accuracy(&dist)];
    let mut transitions_per_pair: Vec<ExpectedTransitions> = Vec::new();

    for _round in 2..=t {
        let mut pair = ExpectedTransitions::default();
        if n == 1 {
            // A single agent has no peers to debate: the engine reuses the
            // starting answer, so the distribution is frozen and every
            // transition preserves correctness.
            let p_correct_now = per_round_agent_accuracy[0];
            pair.cc = p_correct_now;
            pair.ii = 1.0 - p_correct_now;
            transitions_per_pair.push(pair);
            per_round_accuracy.push(per_round_accuracy[0]);
            per_round_agent_accuracy.push(per_round_agent_accuracy[0]);
            continue;
        }
        let mut next = vec![0.0f64; n_states];
        for (state, p_state) in dist.iter().enumerate() {
            if *p_state == 0.0 {
                continue;
            }
            let ds = digits(state);
            // Conditional next-answer distribution per agent.
            let conds: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let a = &config.agents[i];
                    let peers: Vec<Answer> = ds
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, d)| Answer::choice((b'A' + *d as u8) as char))
                        .collect();
                    let adopted = majority(&peers).expect("non-empty peers").answer;
                    let adopted_digit = match adopted {
                        Answer::Choice { letter } => (letter as u8 - b'A') as usize,
                        _ => unreachable!("synthetic peers never abstain"),
                    };
                    let keep = 1.0 - a.sycophancy;
                    let mut cond: Vec<f64> = redraw[i]
                        .iter()
                        .map(|pr| keep * a.revise_prob * pr)
                        .collect();
                    cond[adopted_digit] += a.sycophancy;
                    cond[ds[i]] += keep * (1.0 - a.revise_prob);
                    cond
                })
                .collect();
            // Expected transition mass, by linearity over agents.
            for (i, cond) in conds.iter().enumerate() {
                let p_next_correct = cond[0];
                if ds[i] == 0 {
                    pair.cc += p_state * p_next_correct;
                    pair.ci += p_state * (1.0 - p_next_correct);
                } else {
                    pair.ic += p_state * p_next_correct;
                    pair.ii += p_state * (1.0 - p_next_correct);
                }
            }
            // Joint propagation: agents draw independently given the state.
            for (next_state, slot) in next.iter_mut().enumerate() {
                let nds = digits(next_state);
                let mut p = *p_state;
                for (i, d) in nds.iter().enumerate() {
                    p *= conds[i][*d];
                    if p == 0.0 {
                        break;
                    }
                }
                *slot += p;
            }
        }
        dist = next;
        transitions_per_pair.push(pair);
        per_round_accuracy.push(group_accuracy(&dist));
        per_round_agent_accuracy.push(agent_accuracy(&dist));
    }

    let mut transitions_combined = ExpectedTransitions::default();
    for pair in &transitions_per_pair {
        transitions_combined.add(pair);
    }
    let slots = (n as f64) * (t.saturating_sub(1)) as f64;
    let (ci_rate, ic_rate) = if slots > 0.0 {
        (
            transitions_combined.ci / slots,
            transitions_combined.ic / slots,
        )
    } else {
        (0.0, 0.0)
    };

    let wo_debate = per_round_accuracy[0];
    let after_debate = *per_round_accuracy.last().unwrap();
    Ok(OracleReport {
        rounds: t,
        n_agents: n,
        choices: config.choices,
        wo_debate,
        after_debate,
        delta: after_debate - wo_debate,
        per_round_accuracy,
        per_round_agent_accuracy,
        transitions_per_pair,
        transitions_combined,
        ci_rate,
        ic_rate,
    })
}
