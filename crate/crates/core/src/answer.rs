//! Answer values and numeric canonicalization.
//!
//! Numeric answers are kept as exact canonical decimals (sign + digit
//! strings), never floats: grading compares answers for exact equality by
//! default, and "25" must pool with "25.0" in majority votes.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::types::TaskKind;

/// Exact decimal in canonical form: no leading integer zeros beyond a single
/// "0", no trailing fractional zeros, and no negative zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal {
    negative: bool,
    int_part: String,
    frac_part: String,
}

impl Decimal {
    /// Parses a plain decimal token: optional sign, digits, optional single
    /// fractional point. Returns `None` for anything else.
    pub fn parse(raw: &str) -> Option<Decimal> {
        let s = raw.trim();
        if s.is_empty() {
            return None;
        }
        let (negative, rest) = match s.as_bytes()[0] {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        if rest.is_empty() {
            return None;
        }
        let mut parts = rest.splitn(2, '.');
        let int_raw = parts.next().unwrap_or("");
        let frac_raw = parts.next().unwrap_or("");
        if !int_raw.bytes().all(|b| b.is_ascii_digit())
            || !frac_raw.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        if int_raw.is_empty() && frac_raw.is_empty() {
            return None;
        }
        Some(Decimal::canonical(negative, int_raw, frac_raw))
    }

    fn canonical(negative: bool, int_raw: &str, frac_raw: &str) -> Decimal {
        let int_part = {
            let trimmed = int_raw.trim_start_matches('0');
            if trimmed.is_empty() {
                "0"
            } else {
                trimmed
            }
        }
        .to_string();
        let frac_part = frac_raw.trim_end_matches('0').to_string();
        let is_zero = int_part == "0" && frac_part.is_empty();
        Decimal {
            negative: negative && !is_zero,
            int_part,
            frac_part,
        }
    }

    /// The value plus exactly one. Used by the synthetic agent model as the
    /// canonical wrong numeric answer.
    pub fn plus_one(&self) -> Decimal {
        if !self.negative {
            return Decimal::canonical(false, &increment_digits(&self.int_part), &self.frac_part);
        }
        // Negative cases: -(I.F) + 1.
        if self.int_part == "0" {
            // -0.F + 1 = (1 - 0.F): fractional complement.
            debug_assert!(!self.frac_part.is_empty());
            return Decimal::canonical(false, "0", &frac_complement(&self.frac_part));
        }
        // -(I.F) + 1 = -((I-1).F)  for I >= 1
        Decimal::canonical(true, &decrement_digits(&self.int_part), &self.frac_part)
    }

    /// Lossy float view, used only when a nonzero grading tolerance is
    /// configured.
    pub fn to_f64(&self) -> f64 {
        self.to_string().parse::<f64>().unwrap_or(f64::NAN)
    }
}

fn increment_digits(digits: &str) -> String {
    let mut out: Vec<u8> = digits.bytes().collect();
    let mut i = out.len();
    loop {
        if i == 0 {
            out.insert(0, b'1');
            break;
        }
        i -= 1;
        if out[i] == b'9' {
            out[i] = b'0';
        } else {
            out[i] += 1;
            break;
        }
    }
    String::from_utf8(out).unwrap()
}

fn decrement_digits(digits: &str) -> String {
    // Caller guarantees digits >= 1.
    let mut out: Vec<u8> = digits.bytes().collect();
    let mut i = out.len();
    loop {
        i -= 1;
        if out[i] == b'0' {
            out[i] = b'9';
        } else {
            out[i] -= 1;
            break;
        }
    }
    String::from_utf8(out).unwrap()
}

/// 10^k - F for a k-digit fraction F, as k digits (e.g. "25" -> "75").
fn frac_complement(frac: &str) -> String {
    let mut out: Vec<u8> = Vec::with_capacity(frac.len());
    let mut borrow = true; // computing (10^k - F) = ((10^k - 1) - F) + 1
    for b in frac.bytes().rev() {
        let d = b - b'0';
        let mut v = 9 - d;
        if borrow {
            if v == 9 {
                v = 0;
            } else {
                v += 1;
                borrow = false;
            }
        }
        out.push(v + b'0');
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        write!(f, "{}", self.int_part)?;
        if !self.frac_part.is_empty() {
            write!(f, ".{}", self.frac_part)?;
        }
        Ok(())
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Decimal::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid decimal: {s:?}")))
    }
}

/// One agent answer: a letter choice, an exact numeric value, or an
/// abstention (no structured answer could be extracted).
///
/// Derived equality treats `Abstain == Abstain` as true so answers can be
/// grouped; *correctness* comparisons must go through [`Answer::matches`],
/// where an abstain never matches anything (including another abstain).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    Choice { letter: char },
    Numeric { value: Decimal },
    Abstain,
}

impl Answer {
    pub fn choice(letter: char) -> Answer {
        debug_assert!(letter.is_ascii_uppercase());
        Answer::Choice { letter }
    }

    /// Parses a canonical numeric answer; `None` if `raw` is not a plain decimal.
    pub fn numeric(raw: &str) -> Option<Answer> {
        Decimal::parse(raw).map(|value| Answer::Numeric { value })
    }

    pub fn is_abstain(&self) -> bool {
        matches!(self, Answer::Abstain)
    }

    /// Correctness comparison. Abstain matches nothing. Choices compare by
    /// letter. Numerics compare exactly, or within `tolerance` when a
    /// nonzero absolute tolerance is configured.
    pub fn matches(&self, other: &Answer, tolerance: f64) -> bool {
        match (self, other) {
            (Answer::Abstain, _) | (_, Answer::Abstain) => false,
            (Answer::Choice { letter: a }, Answer::Choice { letter: b }) => a == b,
            (Answer::Numeric { value: a }, Answer::Numeric { value: b }) => {
                if a == b {
                    true
                } else if tolerance > 0.0 {
                    (a.to_f64() - b.to_f64()).abs() <= tolerance
                } else {
                    false
                }
            }
            _ => false,
        }
    }

    /// Short human-readable form used in tables and logs.
    pub fn label(&self) -> String {
        match self {
            Answer::Choice { letter } => letter.to_string(),
            Answer::Numeric { value } => value.to_string(),
            Answer::Abstain => "abstain".to_string(),
        }
    }

    /// Renders the answer in the structured marker format the prompts
    /// mandate for `task`, e.g. `(B)` or `\boxed{25}`.
    pub fn render_marker(&self, task: TaskKind) -> Option<String> {
        match (self, task) {
            (Answer::Choice { letter }, TaskKind::MultipleChoice) => Some(format!("({letter})")),
            (Answer::Numeric { value }, TaskKind::OpenNumeric) => {
                Some(format!("\\boxed{{{value}}}"))
            }
            _ => None,
        }
    }
}

/// Normalizes a raw numeric token (the inside of a boxed answer, or a bare
/// string) into an exact decimal answer.
///
/// Strips currency symbols, percent signs, thousands separators, stray
/// backslashes (LaTeX escapes like `\%`), and surrounding whitespace, then
/// parses what remains. Anything unparseable maps to `Abstain`; extraction
/// never fails. Percent signs are dropped, not divided by 100: "33.33%" in a
/// percentage-valued answer space means 33.33.
pub fn canonicalize_numeric(raw: &str) -> Answer {
    let cleaned: String = raw
        .chars()
        .filter(|c| !matches!(c, '$' | '£' | '€' | '%' | ',' | '\\') && !c.is_whitespace())
        .collect();
    match Decimal::parse(&cleaned) {
        Some(value) => Answer::Numeric { value },
        None => Answer::Abstain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(s: &str) -> Answer {
        Answer::numeric(s).unwrap()
    }

    #[test]
    fn canonicalize_strips_escaped_percent() {
        assert_eq!(canonicalize_numeric("33.33\\%"), num("33.33"));
    }

    #[test]
    fn canonicalize_plain_integer() {
        assert_eq!(canonicalize_numeric("25"), num("25"));
    }

    #[test]
    fn canonicalize_thousands_separator() {
        assert_eq!(canonicalize_numeric("1,000"), num("1000"));
    }

    #[test]
    fn canonicalize_non_numeric_abstains() {
        assert_eq!(canonicalize_numeric("lots"), Answer::Abstain);
        assert_eq!(canonicalize_numeric(""), Answer::Abstain);
        assert_eq!(canonicalize_numeric("$"), Answer::Abstain);
    }

    #[test]
    fn canonicalize_currency_and_percent() {
        assert_eq!(canonicalize_numeric("$200"), num("200"));
        assert_eq!(canonicalize_numeric(" 25% "), num("25"));
        assert_eq!(canonicalize_numeric("\\$1,250.50"), num("1250.5"));
    }

    #[test]
    fn canonical_decimal_forms() {
        assert_eq!(Decimal::parse("007").unwrap().to_string(), "7");
        assert_eq!(Decimal::parse("25.0").unwrap().to_string(), "25");
        assert_eq!(Decimal::parse(".5").unwrap().to_string(), "0.5");
        assert_eq!(Decimal::parse("5.").unwrap().to_string(), "5");
        assert_eq!(Decimal::parse("-0").unwrap().to_string(), "0");
        assert_eq!(Decimal::parse("-0.0").unwrap().to_string(), "0");
        assert_eq!(Decimal::parse("+12.30").unwrap().to_string(), "12.3");
    }

    #[test]
    fn decimal_rejects_garbage() {
        for bad in ["", "-", ".", "1.2.3", "1e5", "12a", "--3", "4 2"] {
            assert!(Decimal::parse(bad).is_none(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn numeric_equality_pools_trailing_zeroes() {
        assert_eq!(num("25"), num("25.0"));
        assert_eq!(num("25"), num("025"));
        assert_ne!(num("25"), num("25.01"));
    }

    #[test]
    fn plus_one_cases() {
        let cases = [
            ("25", "26"),
            ("33.33", "34.33"),
            ("99", "100"),
            ("0", "1"),
            ("-3", "-2"),
            ("-3.5", "-2.5"),
            ("-1", "0"),
            ("-0.25", "0.75"),
            ("-0.5", "0.5"),
            ("9.999", "10.999"),
        ];
        for (input, want) in cases {
            assert_eq!(
                Decimal::parse(input).unwrap().plus_one().to_string(),
                want,
                "plus_one({input})"
            );
        }
    }

    #[test]
    fn matches_semantics() {
        assert!(num("25").matches(&num("25.0"), 0.0));
        assert!(!num("25").matches(&num("25.4"), 0.0));
        assert!(num("25").matches(&num("25.4"), 0.5));
        assert!(!Answer::Abstain.matches(&Answer::Abstain, 0.0));
        assert!(!Answer::Abstain.matches(&num("25"), 0.0));
        assert!(Answer::choice('B').matches(&Answer::choice('B'), 0.0));
        assert!(!Answer::choice('B').matches(&Answer::choice('C'), 0.0));
        assert!(!Answer::choice('B').matches(&num("2"), 0.0));
    }

    #[test]
    fn canonicalize_idempotent_on_rendering() {
        for s in ["33.33", "25", "1000", "-4.5", "0.001", "0"] {
            let first = canonicalize_numeric(s);
            let Answer::Numeric { value } = &first else {
                panic!("expected numeric for {s}")
            };
            assert_eq!(canonicalize_numeric(&value.to_string()), first);
        }
    }

    #[test]
    fn serde_round_trip() {
        for ans in [Answer::choice('E'), num("33.33"), Answer::Abstain] {
            let json = serde_json::to_string(&ans).unwrap();
            let back: Answer = serde_json::from_str(&json).unwrap();
            assert_eq!(ans, back);
        }
        assert_eq!(
            serde_json::to_string(&num("33.33")).unwrap(),
            r#"{"kind":"numeric","value":"33.33"}"#
        );
    }
}
