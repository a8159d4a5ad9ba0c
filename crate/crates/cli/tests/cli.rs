//! End-to-end tests of the compiled binary: exit codes, printed rows, and
//! the run-then-report purity contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_debate-lab"))
}

fn repo_path(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(relative)
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn synthetic_config(dir: &Path) -> PathBuf {
    let text = format!(
        r#"
task = "multiple_choice"
run_id = "cli-test"
seeds = [5, 6]
rounds = 2
sample_n = 40
parallel = 2
runs_dir = {runs:?}

[synthetic_dataset]
count = 80
choices = 5

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

[[agents]]
id = "strong"
backend = "synthetic"
p_correct = 0.9
sycophancy = 0.8
revise_prob = 0.1
"#,
        runs = dir.join("runs").display().to_string()
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_prints_row_and_report_reproduces_it_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());

    let run = binary()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let run_stdout = stdout(&run);
    let row = run_stdout
        .lines()
        .find(|l| l.contains("syn(p="))
        .expect("results row printed");

    let report = binary()
        .args(["report", "--runs-dir"])
        .arg(dir.path().join("runs"))
        .arg("cli-test")
        .output()
        .unwrap();
    assert!(
        report.status.success(),
        "{}",
        String::from_utf8_lossy(&report.stderr)
    );
    let report_stdout = stdout(&report);
    assert!(
        report_stdout.lines().any(|l| l == row),
        "report must reproduce the run-time row exactly:\nrun:    {row}\nreport: {report_stdout}"
    );
    for artifact in ["results.csv", "per_round.csv", "transitions.csv"] {
        assert!(dir
            .path()
            .join("runs/cli-test/report")
            .join(artifact)
            .is_file());
    }
}

#[test]
fn rerunning_a_completed_run_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());
    let first = binary()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(first.status.success());
    let second = binary()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(second.status.success());
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn unknown_backend_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("backend = \"synthetic\"", "backend = \"telepathy\"");
    std::fs::write(&config, text).unwrap();
    let output = binary()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("backend"));
}

#[test]
fn replay_rejects_non_scripted_rosters() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());
    let output = binary()
        .args(["replay", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("scripted"));
}

#[test]
fn report_on_missing_run_fails() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["report", "--runs-dir"])
        .arg(dir.path())
        .arg("never-ran")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("not found"));
}

#[test]
fn dry_run_makes_no_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());
    let output = binary()
        .args(["run", "--dry-run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("config ok"));
    assert!(stdout(&output).contains("answer in the form (X)"));
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn seed_override_changes_the_seed_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());
    let output = binary()
        .args(["run", "--seed-override", "9", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout(&output).contains("seeds: [9]"));
    assert!(dir
        .path()
        .join("runs/cli-test/transcripts/seed-9.jsonl")
        .is_file());
}

#[test]
fn oracle_emits_exact_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = synthetic_config(dir.path());
    let output = binary()
        .args(["oracle", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("w/o debate"));
    let json_start = text.find('{').unwrap();
    let value: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(value["rounds"], 2);
    assert_eq!(value["n_agents"], 3);
    assert!(value["delta"].as_f64().unwrap() < 0.0);
}

#[test]
fn replay_fixture_round_trip_through_binary() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
task = "multiple_choice"
run_id = "replay-bin"
dataset = {dataset:?}
seeds = [1]
rounds = 2
parallel = 1
runs_dir = {runs:?}

[[agents]]
id = "lead"
backend = "scripted"
fixture = {fixture:?}

[[agents]]
id = "peer-1"
backend = "scripted"
fixture = {fixture:?}

[[agents]]
id = "peer-2"
backend = "scripted"
fixture = {fixture:?}
"#,
        dataset = repo_path("fixtures/replay_choice.jsonl")
            .display()
            .to_string(),
        fixture = repo_path("fixtures/replay_flip.json").display().to_string(),
        runs = dir.path().join("runs").display().to_string(),
    );
    let config = dir.path().join("replay.toml");
    std::fs::write(&config, text).unwrap();
    let output = binary()
        .args(["replay", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    // Both replay questions start at the wrong majority and stay there.
    assert!(stdout(&output).contains("0.0±0.0"));

    let report = binary()
        .args(["report", "--runs-dir"])
        .arg(dir.path().join("runs"))
        .arg("replay-bin")
        .output()
        .unwrap();
    assert!(report.status.success());
    let transitions =
        std::fs::read_to_string(dir.path().join("runs/replay-bin/report/transitions.csv")).unwrap();
    // One lead flip per question, two steady wrong peers per question.
    assert!(transitions.contains("1->2,0,2,0,4,0"), "{transitions}");
}

#[test]
fn imported_dataset_drives_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    // A miniature source in the nested-question upstream shape.
    let src = dir.path().join("upstream.jsonl");
    let lines: Vec<String> = (0..12)
        .map(|i| {
            format!(
                r#"{{"id":"u-{i:02}","question":{{"stem":"Pick the marked option for item {i}.","choices":[{{"label":"A","text":"first"}},{{"label":"B","text":"second"}},{{"label":"C","text":"third"}}]}},"answerKey":"B"}}"#
            )
        })
        .collect();
    std::fs::write(&src, lines.join("\n")).unwrap();
    let dataset = dir.path().join("canonical.jsonl");
    let import = binary()
        .arg("import-csqa")
        .arg(&src)
        .arg(&dataset)
        .output()
        .unwrap();
    assert!(
        import.status.success(),
        "{}",
        String::from_utf8_lossy(&import.stderr)
    );

    let config_text = format!(
        r#"
task = "multiple_choice"
run_id = "file-backed"
dataset = {dataset:?}
sample_n = 8
seeds = [3]
rounds = 2
runs_dir = {runs:?}

[[agents]]
id = "a"
backend = "synthetic"
p_correct = 1.0
sycophancy = 0.0
revise_prob = 0.0

[[agents]]
id = "b"
backend = "synthetic"
p_correct = 1.0
sycophancy = 0.0
revise_prob = 0.0
"#,
        dataset = dataset.display().to_string(),
        runs = dir.path().join("runs").display().to_string(),
    );
    let config = dir.path().join("config.toml");
    std::fs::write(&config, config_text).unwrap();
    let run = binary()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    // Perfect frozen agents on a real dataset: both columns at 100%.
    assert!(
        stdout(&run).contains("100.0±0.0 | 100.0±0.0 — 0.0"),
        "{}",
        stdout(&run)
    );
}

#[test]
fn importers_round_trip_through_binary() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("gsm8k.jsonl");
    std::fs::write(
        &src,
        r#"{"question":"Two numbers sum to 10 and differ by 2. What is the larger?","answer":"Half of 10 is 5... #### 6"}"#,
    )
    .unwrap();
    let dst = dir.path().join("canonical.jsonl");
    let output = binary()
        .arg("import-gsm8k")
        .arg(&src)
        .arg(&dst)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("imported 1 questions"));
    let line = std::fs::read_to_string(&dst).unwrap();
    assert!(line.contains("\"answer\":\"6\""));
}
