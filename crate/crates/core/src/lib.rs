//! Debate lab: an engine and experiment harness for multi-agent debate
//! among heterogeneous language-model agents.
//!
//! A group of agents answers a question independently, then iteratively
//! revises its answers after reading the other agents' previous responses;
//! the group's answer is the majority vote. The crate provides the debate
//! engine, pluggable agent backends (live chat endpoints, scripted replays,
//! and a seeded synthetic conformity model), answer extraction, majority
//! voting, accuracy/transition metrics with seed aggregation, dataset
//! loading and sampling, persistent run storage, and an exact enumeration
//! oracle for the synthetic model.

pub mod agents;
pub mod answer;
pub mod config;
pub mod data;
pub mod engine;
pub mod extract;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod runner;
pub mod store;
pub mod types;
pub mod vote;

pub use answer::{canonicalize_numeric, Answer, Decimal};
pub use types::{
    AgentSpec, BackendKind, Choice, DebateConfig, Generation, GenerationParams, MajorityOutcome,
    PromptSet, Question, RoundRecord, TaskKind, Transcript,
};
