//! Deterministic extraction of structured answers from raw model text.
//!
//! The prompts instruct models to end with `(X)` for multiple choice and
//! `\boxed{value}` for numeric tasks. Responses often restate rejected
//! options mid-text before committing, so the *last* well-formed marker
//! wins. Extraction is pure and total: unparseable text yields
//! [`Answer::Abstain`], never an error.

use once_cell::sync::Lazy;
use regex::Regex;

use crate::answer::{canonicalize_numeric, Answer};
use crate::types::TaskKind;

/// `(A)`..`(Z)`: exactly one uppercase letter inside parentheses.
/// Lowercase `(x)` and multi-character `(AB)` groups do not qualify, which
/// keeps false positives from formula text low.
static CHOICE_MARKER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\(([A-Z])\)").unwrap());

/// Extracts a letter answer: the last `(X)` marker in the text, or abstain.
pub fn extract_choice(raw_text: &str) -> Answer {
    CHOICE_MARKER
        .captures_iter(raw_text)
        .last()
        .map(|cap| Answer::choice(cap[1].chars().next().unwrap()))
        .unwrap_or(Answer::Abstain)
}

/// Extracts a numeric answer from the last balanced `\boxed{...}` group.
///
/// Brace scanning handles nested groups like `\boxed{\frac{1}{2}}`; the
/// balanced content goes through [`canonicalize_numeric`], so non-numeric
/// content abstains rather than falling back to an earlier box.
pub fn extract_boxed(raw_text: &str) -> Answer {
    const MARKER: &str = "\\boxed{";
    let mut starts: Vec<usize> = Vec::new();
    let mut from = 0;
    while let Some(pos) = raw_text[from..].find(MARKER) {
        starts.push(from + pos);
        from += pos + MARKER.len();
    }
    for start in starts.into_iter().rev() {
        let body_start = start + MARKER.len();
        if let Some(body) = balanced_group(&raw_text[body_start..]) {
            return canonicalize_numeric(body);
        }
    }
    Answer::Abstain
}

/// Returns the content up to the brace matching an already-open group, or
/// `None` if the group never closes.
fn balanced_group(s: &str) -> Option<&str> {
    let mut depth = 1usize;
    for (i, b) in s.bytes().enumerate() {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[..i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Task-directed extraction: `(X)` markers for multiple choice, boxed
/// values for numeric tasks.
pub fn extract(raw_text: &str, task: TaskKind) -> Answer {
    match task {
        TaskKind::MultipleChoice => extract_choice(raw_text),
        TaskKind::OpenNumeric => extract_boxed(raw_text),
    }
}
