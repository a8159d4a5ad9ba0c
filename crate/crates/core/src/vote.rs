//! Majority aggregation with deterministic tie-breaking.

use thiserror::Error;

use crate::answer::Answer;
use crate::types::MajorityOutcome;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VoteError {
    #[error("majority over an empty vote list")]
    EmptyInput,
}

/// Majority vote over answers ordered by roster position.
///
/// Abstains are dropped before counting ("filtering"); the most frequent
/// remaining answer wins. Ties break toward the answer whose earliest
/// proposer has the lowest roster position, and `tie` is set whenever two or
/// more answers share the top count so the tie-break's influence stays
/// measurable. An all-abstain list yields `(Abstain, false)`.
pub fn majority(answers: &[Answer]) -> Result<MajorityOutcome, VoteError> {
    if answers.is_empty() {
        return Err(VoteError::EmptyInput);
    }
    // (answer, count) in first-appearance order; first appearance encodes
    // the earliest-proposer tie-break.
    let mut tallies: Vec<(&Answer, usize)> = Vec::new();
    for answer in answers.iter().filter(|a| !a.is_abstain()) {
        match tallies.iter_mut().find(|(a, _)| *a == answer) {
            Some((_, count)) => *count += 1,
            None => tallies.push((answer, 1)),
        }
    }
    let Some(top) = tallies.iter().map(|(_, c)| *c).max() else {
        return Ok(MajorityOutcome {
            answer: Answer::Abstain,
            tie: false,
        });
    };
    let tie = tallies.iter().filter(|(_, c)| *c == top).count() >= 2;
    let winner = tallies
        .iter()
        .find(|(_, c)| *c == top)
        .map(|(a, _)| (*a).clone())
        .unwrap();
    Ok(MajorityOutcome {
        answer: winner,
        tie,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(c: char) -> Answer {
        Answer::choice(c)
    }

    #[test]
    fn clear_majority() {
        let out = majority(&[ch('E'), ch('E'), ch('B')]).unwrap();
        assert_eq!(out.answer, ch('E'));
        assert!(!out.tie);
    }

    #[test]
    fn three_way_tie_goes_to_earliest_proposer() {
        let out = majority(&[ch('A'), ch('B'), ch('C')]).unwrap();
        assert_eq!(out.answer, ch('A'));
        assert!(out.tie);
    }

    #[test]
    fn abstains_are_dropped() {
        let out = majority(&[Answer::Abstain, ch('B'), ch('B')]).unwrap();
        assert_eq!(out.answer, ch('B'));
        assert!(!out.tie);
    }

    #[test]
    fn all_abstain() {
        let out = majority(&[Answer::Abstain, Answer::Abstain]).unwrap();
        assert_eq!(out.answer, Answer::Abstain);
        assert!(!out.tie);
    }

    #[test]
    fn empty_input_errors() {
        assert_eq!(majority(&[]), Err(VoteError::EmptyInput));
    }

    #[test]
    fn numeric_votes_pool_by_canonical_value() {
        let a = Answer::numeric("25").unwrap();
        let b = Answer::numeric("25.0").unwrap();
        let c = Answer::numeric("26").unwrap();
        let out = majority(&[a.clone(), c, b]).unwrap();
        assert_eq!(out.answer, a);
        assert!(!out.tie);
    }

    #[test]
    fn unanimous_list_is_not_a_tie() {
        let out = majority(&[ch('D'), ch('D'), ch('D')]).unwrap();
        assert_eq!(out.answer, ch('D'));
        assert!(!out.tie);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vote() -> impl Strategy<Value = Answer> {
            prop_oneof![
                (0u8..5).prop_map(|i| Answer::choice((b'A' + i) as char)),
                Just(Answer::Abstain),
            ]
        }

        proptest! {
            #[test]
            fn adding_abstain_never_changes_result(votes in proptest::collection::vec(vote(), 1..8), at in 0usize..8) {
                let base = majority(&votes).unwrap();
                let mut extended = votes.clone();
                extended.insert(at.min(votes.len()), Answer::Abstain);
                prop_assert_eq!(majority(&extended).unwrap(), base);
            }

            #[test]
            fn winning_count_is_permutation_invariant(votes in proptest::collection::vec(vote(), 1..8), rot in 0usize..8) {
                let count_of = |vs: &[Answer]| {
                    let out = majority(vs).unwrap();
                    vs.iter().filter(|v| **v == out.answer && !v.is_abstain()).count()
                };
                let mut rotated = votes.clone();
                rotated.rotate_left(rot % votes.len().max(1));
                prop_assert_eq!(count_of(&votes), count_of(&rotated));
                // Winner itself is permutation-invariant when no tie.
                let base = majority(&votes).unwrap();
                if !base.tie {
                    prop_assert_eq!(majority(&rotated).unwrap().answer, base.answer);
                }
            }
        }
    }
}
