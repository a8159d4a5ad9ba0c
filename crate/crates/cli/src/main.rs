//! `debate-lab`: configure, run, resume, and report multi-agent debate
//! experiments; drive synthetic simulations and exact-enumeration checks.
//!
//! Exit codes: 0 success, 2 config error, 3 partial run (some questions
//! failed; progress saved), 4 backend failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use debate_lab_core::config::{ConfigError, ExperimentConfig};
use debate_lab_core::data;
use debate_lab_core::engine::render_task_prompt;
use debate_lab_core::oracle;
use debate_lab_core::runner::{self, RunError};
use debate_lab_core::store::{self, RunStore};
use debate_lab_core::types::BackendKind;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_BACKEND: u8 = 4;

#[derive(Parser)]
#[command(
    name = "debate-lab",
    version,
    about = "Multi-agent debate experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) an experiment from a config file.
    Run(RunArgs),
    /// Run a scripted-replay experiment (offline fixtures only).
    Replay(RunArgs),
    /// Recompute tables and CSV exports from stored runs.
    Report(ReportArgs),
    /// Exact expected metrics for an all-synthetic roster by enumeration.
    Oracle(OracleArgs),
    /// Convert a CommonsenseQA JSONL release to the canonical format.
    ImportCsqa { src: PathBuf, dst: PathBuf },
    /// Convert an MMLU-style CSV to the canonical format.
    ImportMmlu { src: PathBuf, dst: PathBuf },
    /// Convert a GSM8K JSONL release to the canonical format.
    ImportGsm8k { src: PathBuf, dst: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list, e.g. --seed-override 7,8,9.
    #[arg(long, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    /// Concurrent debates (default from config, else 4).
    #[arg(long)]
    parallel: Option<usize>,
    /// Override the run id (also used to resume a previous run).
    #[arg(long)]
    run_id: Option<String>,
    /// Validate config and prompts, print a sample prompt, make no backend calls.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding runs (the config's runs_dir).
    #[arg(long, default_value = "runs")]
    runs_dir: PathBuf,
    /// Run ids to report on.
    #[arg(required = true)]
    run_ids: Vec<String>,
}

#[derive(Args)]
struct OracleArgs {
    /// Experiment config with an all-synthetic roster.
    #[arg(long)]
    config: PathBuf,
    /// Override the round count.
    #[arg(long)]
    rounds: Option<u32>,
    /// Answer-space size (defaults to the config's synthetic_dataset.choices;
    /// open_numeric tasks behave as 2).
    #[arg(long)]
    choices: Option<u32>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args, false),
        Command::Replay(args) => run_command(args, true),
        Command::Report(args) => report_command(args),
        Command::Oracle(args) => oracle_command(args),
        Command::ImportCsqa { src, dst } => import_command("csqa", &src, &dst),
        Command::ImportMmlu { src, dst } => import_command("mmlu", &src, &dst),
        Command::ImportGsm8k { src, dst } => import_command("gsm8k", &src, &dst),
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seeds) = &args.seed_override {
        config.seeds = seeds.clone();
    }
    if let Some(parallel) = args.parallel {
        config.parallel = parallel.max(1);
    }
    if let Some(run_id) = &args.run_id {
        config.run_id = Some(run_id.clone());
    }
    Ok(config)
}

fn run_command(args: RunArgs, replay_only: bool) -> ExitCode {
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if replay_only {
        let non_scripted: Vec<&str> = config
            .roster
            .iter()
            .filter(|a| !matches!(a.backend, BackendKind::Scripted { .. }))
            .map(|a| a.agent_id.as_str())
            .collect();
        if !non_scripted.is_empty() {
            return fail(
                EXIT_CONFIG,
                format!(
                    "replay requires scripted backends only; offending agents: {non_scripted:?}"
                ),
            );
        }
    }
    if args.dry_run {
        return dry_run(&config);
    }
    let provider = match runner::build_provider(&config) {
        Ok(p) => p,
        Err(e @ RunError::HttpUnavailable) => return fail(EXIT_BACKEND, e),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let run_id = runner::resolve_run_id(&config);
    println!("run id: {run_id}");
    match runner::execute_run(&config, provider.as_ref(), &run_id) {
        Ok(outcome) => {
            let rows = vec![(outcome.label.clone(), outcome.aggregate.clone())];
            print!("{}", store::render_results_table(&rows));
            println!(
                "seeds: {:?}  questions/seed: {}  stored under: {}",
                config.seeds,
                outcome
                    .seed_summaries
                    .first()
                    .map(|(_, s)| s.n_questions)
                    .unwrap_or(0),
                RunStore::new(&config.runs_dir).run_dir(&run_id).display()
            );
            if outcome.failed_questions > 0 {
                eprintln!(
                    "warning: {} question(s) failed after retries and were excluded; see log.jsonl",
                    outcome.failed_questions
                );
                return ExitCode::from(EXIT_PARTIAL);
            }
            ExitCode::SUCCESS
        }
        Err(e @ RunError::AllQuestionsFailed { .. }) => fail(EXIT_BACKEND, e),
        Err(e @ RunError::Config(_)) => fail(EXIT_CONFIG, e),
        Err(e) => fail(1, e),
    }
}

fn dry_run(config: &ExperimentConfig) -> ExitCode {
    let population = match runner::load_population(config) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let n = config.sample_n.unwrap_or(population.len());
    if n > population.len() {
        return fail(
            EXIT_CONFIG,
            format!("sample_n = {n} exceeds population of {}", population.len()),
        );
    }
    let sampled = match data::sample(&population, n.min(1), config.seeds[0]) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    println!(
        "config ok: {} agents, {} rounds, {} seeds",
        config.roster.len(),
        config.rounds,
        config.seeds.len()
    );
    println!(
        "population: {} questions; sampling {n} per seed",
        population.len()
    );
    if let Some(question) = sampled.first() {
        match render_task_prompt(question, &config.prompts) {
            Ok(prompt) => {
                println!("sample task prompt for {}:", question.id);
                println!("{prompt}");
            }
            Err(e) => return fail(EXIT_CONFIG, e),
        }
    }
    ExitCode::SUCCESS
}

fn report_command(args: ReportArgs) -> ExitCode {
    let store = RunStore::new(&args.runs_dir);
    let mut rows = Vec::new();
    let mut transition_rows = Vec::new();
    for run_id in &args.run_ids {
        if !store.run_exists(run_id) {
            return fail(
                1,
                format!("run {run_id} not found under {}", args.runs_dir.display()),
            );
        }
        let outcome = match runner::recompute_outcome(&store, run_id) {
            Ok(o) => o,
            Err(e) => return fail(1, e),
        };
        let config = match store
            .read_config_text(run_id)
            .map_err(RunError::from)
            .and_then(|t| ExperimentConfig::from_toml(&t).map_err(RunError::from))
        {
            Ok(c) => c,
            Err(e) => return fail(1, e),
        };
        let task_name = match config.task {
            debate_lab_core::TaskKind::MultipleChoice => "multiple_choice",
            debate_lab_core::TaskKind::OpenNumeric => "open_numeric",
        };
        let summaries: Vec<_> = outcome
            .seed_summaries
            .iter()
            .map(|(_, s)| s.clone())
            .collect();
        transition_rows.push((outcome.label.clone(), task_name.to_string(), summaries));
        rows.push((run_id.clone(), outcome));
    }

    let table_rows: Vec<(String, debate_lab_core::metrics::AggregateSummary)> = rows
        .iter()
        .map(|(_, o)| (o.label.clone(), o.aggregate.clone()))
        .collect();
    print!("{}", store::render_results_table(&table_rows));

    for ((run_id, outcome), transitions) in rows.iter().zip(&transition_rows) {
        let results =
            store::results_table_csv(&[(outcome.label.clone(), outcome.aggregate.clone())]);
        let per_round =
            store::per_round_series_csv(&[(outcome.label.clone(), outcome.aggregate.clone())]);
        let breakdown = store::transition_breakdown_csv(std::slice::from_ref(transitions));
        let written = [
            store.write_report_file(run_id, "results.csv", &results),
            store.write_report_file(run_id, "per_round.csv", &per_round),
            store.write_report_file(run_id, "transitions.csv", &breakdown),
        ];
        for path in written {
            match path {
                Ok(p) => println!("wrote {}", p.display()),
                Err(e) => return fail(1, e),
            }
        }
    }
    ExitCode::SUCCESS
}

fn oracle_command(args: OracleArgs) -> ExitCode {
    let config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let agents = match oracle::agents_from_roster(&config.roster) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let choices = args
        .choices
        .or(config.synthetic_dataset.map(|s| s.choices))
        .or(match config.task {
            debate_lab_core::TaskKind::OpenNumeric => Some(2),
            debate_lab_core::TaskKind::MultipleChoice => None,
        });
    let Some(choices) = choices else {
        return fail(
            EXIT_CONFIG,
            "pass --choices (no synthetic_dataset in config)",
        );
    };
    let oracle_config = oracle::OracleConfig {
        agents,
        rounds: args.rounds.unwrap_or(config.rounds),
        choices,
    };
    match oracle::enumerate(&oracle_config) {
        Ok(report) => {
            println!(
                "exact expectations over {} agents, {} choices, {} rounds:",
                report.n_agents, report.choices, report.rounds
            );
            println!(
                "  w/o debate {:.4}  after debate {:.4}  delta {:+.4}",
                report.wo_debate, report.after_debate, report.delta
            );
            println!(
                "  per-round majority accuracy: {}",
                report
                    .per_round_accuracy
                    .iter()
                    .map(|a| format!("{a:.4}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            println!(
                "  expected transitions/question: cc {:.4}  ci {:.4}  ic {:.4}  ii {:.4}",
                report.transitions_combined.cc,
                report.transitions_combined.ci,
                report.transitions_combined.ic,
                report.transitions_combined.ii
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_CONFIG, e),
    }
}

fn import_command(kind: &str, src: &Path, dst: &Path) -> ExitCode {
    let result = match kind {
        "csqa" => data::import_csqa(src, dst),
        "mmlu" => data::import_mmlu(src, dst),
        "gsm8k" => data::import_gsm8k(src, dst),
        _ => unreachable!(),
    };
    match result {
        Ok(count) => {
            println!("imported {count} questions into {}", dst.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, e),
    }
}
