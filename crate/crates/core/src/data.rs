//! Dataset loading, validation, deterministic sampling, and importers for
//! the upstream benchmark formats.
//!
//! The engine consumes one canonical format only: UTF-8, one JSON object
//! per line with fields `id`, `question`, `choices` (array of
//! `{letter, text}`, absent for numeric tasks), and `answer` (a letter or a
//! numeric string). The importers convert third-party releases into this
//! format so upstream schema drift stays out of the engine.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{canonicalize_numeric, Answer};
use crate::rng::SplitMix64;
use crate::types::{Choice, Question, TaskKind};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("question {id}: {detail}")]
    InvariantViolation { id: String, detail: String },
    #[error("duplicate question id {id} (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("requested sample of {n} from {available} questions")]
    NTooLarge { n: usize, available: usize },
}

/// Canonical on-disk record.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choices: Option<Vec<Choice>>,
    answer: String,
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads a canonical dataset file, validating every question and preserving
/// file order.
pub fn load_dataset(path: &Path, task: TaskKind) -> Result<Vec<Question>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_dataset(&text, task)
}

/// Same as [`load_dataset`] over in-memory text.
pub fn parse_dataset(text: &str, task: TaskKind) -> Result<Vec<Question>, DataError> {
    let mut questions = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|e| DataError::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        if !seen_ids.insert(record.id.clone()) {
            return Err(DataError::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        let question = record_to_question(record, task, line_no)?;
        question
            .validate()
            .map_err(|e| DataError::InvariantViolation {
                id: question.id.clone(),
                detail: e.to_string(),
            })?;
        questions.push(question);
    }
    Ok(questions)
}

fn record_to_question(record: Record, task: TaskKind, line: usize) -> Result<Question, DataError> {
    let ground_truth = match task {
        TaskKind::MultipleChoice => {
            let mut letters = record.answer.trim().chars();
            match (letters.next(), letters.next()) {
                (Some(letter), None) if letter.is_ascii_uppercase() => Answer::choice(letter),
                _ => {
                    return Err(DataError::Parse {
                        line,
                        detail: format!(
                            "answer {:?} is not a single uppercase letter",
                            record.answer
                        ),
                    })
                }
            }
        }
        TaskKind::OpenNumeric => match canonicalize_numeric(&record.answer) {
            Answer::Numeric { value } => Answer::Numeric { value },
            _ => {
                return Err(DataError::Parse {
                    line,
                    detail: format!("answer {:?} is not numeric", record.answer),
                })
            }
        },
    };
    Ok(Question {
        id: record.id,
        task,
        text: record.question,
        choices: record.choices.unwrap_or_default(),
        ground_truth,
    })
}

/// Serializes questions back to the canonical line format. Inverse of
/// [`load_dataset`] for valid inputs.
pub fn dataset_to_string(questions: &[Question]) -> String {
    let mut out = String::new();
    for q in questions {
        let record = Record {
            id: q.id.clone(),
            question: q.text.clone(),
            choices: if q.choices.is_empty() {
                None
            } else {
                Some(q.choices.clone())
            },
            answer: q.ground_truth.label(),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: &Path, questions: &[Question]) -> Result<(), DataError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(dataset_to_string(questions).as_bytes())
        .map_err(|e| io_err(path, e))
}

/// Deterministic sample without replacement: a splitmix64-seeded
/// Fisher-Yates shuffle of the whole list, truncated to `n`. The same
/// (input, seed) pair yields the identical subset on every platform.
pub fn sample(questions: &[Question], n: usize, seed: u64) -> Result<Vec<Question>, DataError> {
    if n > questions.len() {
        return Err(DataError::NTooLarge {
            n,
            available: questions.len(),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut shuffled: Vec<Question> = questions.to_vec();
    for i in (1..shuffled.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        shuffled.swap(i, j);
    }
    shuffled.truncate(n);
    Ok(shuffled)
}

/// Placeholder questions for offline synthetic experiments. Multiple-choice
/// questions rotate the correct letter through the option list; numeric
/// questions use the question index as ground truth.
pub fn synthetic_questions(count: usize, task: TaskKind, choices: u32) -> Vec<Question> {
    (0..count)
        .map(|i| match task {
            TaskKind::MultipleChoice => {
                let letters: Vec<char> = (0..choices).map(|k| (b'A' + k as u8) as char).collect();
                let truth = letters[i % letters.len()];
                Question {
                    id: format!("syn-{i:05}"),
                    task,
                    text: format!("synthetic question {i}"),
                    choices: letters
                        .iter()
                        .map(|l| Choice {
                            letter: *l,
                            text: format!("option {l}"),
                        })
                        .collect(),
                    ground_truth: Answer::choice(truth),
                }
            }
            TaskKind::OpenNumeric => Question {
                id: format!("syn-{i:05}"),
                task,
                text: format!("synthetic numeric question {i}"),
                choices: vec![],
                ground_truth: Answer::numeric(&i.to_string()).expect("index is numeric"),
            },
        })
        .collect()
}

// --- importers -----------------------------------------------------------

/// CommonsenseQA release format: JSONL with a nested question object.
#[derive(Deserialize)]
struct CsqaRecord {
    id: String,
    question: CsqaQuestion,
    #[serde(rename = "answerKey")]
    answer_key: String,
}

#[derive(Deserialize)]
struct CsqaQuestion {
    stem: String,
    choices: Vec<CsqaChoice>,
}

#[derive(Deserialize)]
struct CsqaChoice {
    label: String,
    text: String,
}

/// Converts a CommonsenseQA JSONL release into the canonical format.
pub fn import_csqa(src: &Path, dst: &Path) -> Result<usize, DataError> {
    let text = fs::read_to_string(src).map_err(|e| io_err(src, e))?;
    let mut questions = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: CsqaRecord = serde_json::from_str(line).map_err(|e| DataError::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        let choices = record
            .question
            .choices
            .iter()
            .map(|c| {
                let mut letters = c.label.chars();
                match (letters.next(), letters.next()) {
                    (Some(letter), None) if letter.is_ascii_uppercase() => Ok(Choice {
                        letter,
                        text: c.text.clone(),
                    }),
                    _ => Err(DataError::Parse {
                        line: line_no,
                        detail: format!("choice label {:?}", c.label),
                    }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut answer_chars = record.answer_key.trim().chars();
        let answer = match (answer_chars.next(), answer_chars.next()) {
            (Some(letter), None) if letter.is_ascii_uppercase() => letter,
            _ => {
                return Err(DataError::Parse {
                    line: line_no,
                    detail: format!("answerKey {:?}", record.answer_key),
                })
            }
        };
        questions.push(Question {
            id: record.id,
            task: TaskKind::MultipleChoice,
            text: record.question.stem,
            choices,
            ground_truth: Answer::choice(answer),
        });
    }
    save_dataset(dst, &questions)?;
    Ok(questions.len())
}

/// Converts an MMLU-style headerless CSV (question, options..., answer
/// letter) into the canonical format. Ids are derived from the line number.
pub fn import_mmlu(src: &Path, dst: &Path) -> Result<usize, DataError> {
    let file = fs::File::open(src).map_err(|e| io_err(src, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut questions = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line_no = idx + 1;
        let row = row.map_err(|e| DataError::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        if row.len() < 3 {
            return Err(DataError::Parse {
                line: line_no,
                detail: format!(
                    "expected question, options, answer; got {} fields",
                    row.len()
                ),
            });
        }
        let text = row.get(0).unwrap().to_string();
        let options = (1..row.len() - 1)
            .map(|i| Choice {
                letter: (b'A' + (i - 1) as u8) as char,
                text: row.get(i).unwrap().to_string(),
            })
            .collect::<Vec<_>>();
        let answer_field = row.get(row.len() - 1).unwrap().trim().to_string();
        let mut answer_chars = answer_field.chars();
        let answer = match (answer_chars.next(), answer_chars.next()) {
            (Some(letter), None) if letter.is_ascii_uppercase() => letter,
            _ => {
                return Err(DataError::Parse {
                    line: line_no,
                    detail: format!("answer column {answer_field:?}"),
                })
            }
        };
        questions.push(Question {
            id: format!("mmlu-{line_no:05}"),
            task: TaskKind::MultipleChoice,
            text,
            choices: options,
            ground_truth: Answer::choice(answer),
        });
    }
    save_dataset(dst, &questions)?;
    Ok(questions.len())
}

/// GSM8K release format: JSONL with rationale + "#### <number>" answers.
#[derive(Deserialize)]
struct Gsm8kRecord {
    question: String,
    answer: String,
}

/// Converts a GSM8K JSONL release into the canonical format: the ground
/// truth is the final number after the `####` marker, commas stripped.
pub fn import_gsm8k(src: &Path, dst: &Path) -> Result<usize, DataError> {
    let text = fs::read_to_string(src).map_err(|e| io_err(src, e))?;
    let mut questions = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Gsm8kRecord = serde_json::from_str(line).map_err(|e| DataError::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        let marker = record
            .answer
            .rfind("####")
            .ok_or_else(|| DataError::Parse {
                line: line_no,
                detail: "missing #### answer marker".into(),
            })?;
        let tail = record.answer[marker + 4..].trim();
        let ground_truth = match canonicalize_numeric(tail) {
            Answer::Numeric { value } => Answer::Numeric { value },
            _ => {
                return Err(DataError::Parse {
                    line: line_no,
                    detail: format!("final answer {tail:?} is not numeric"),
                })
            }
        };
        questions.push(Question {
            id: format!("gsm8k-{:05}", line_no - 1),
            task: TaskKind::OpenNumeric,
            text: record.question,
            choices: vec![],
            ground_truth,
        });
    }
    save_dataset(dst, &questions)?;
    Ok(questions.len())
}
