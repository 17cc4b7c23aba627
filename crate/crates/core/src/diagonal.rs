//! Cantor diagonal operator, persistent prepend, and the recursive sequence
//! T₁, T₂, … obtained by diagonalizing and prepending repeatedly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::digits::{reals_differ, DigitStream, Separation, StreamSequence};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagonalError {
    /// The budget was too small to separate the two reals; never a claim of equality.
    #[error("could not prove T_{generated} differs from {other} within {budget} digits")]
    DifferenceUnresolved { generated: usize, other: String, budget: u64 },
    #[error("count must be at least 1")]
    ZeroCount,
}

/// Column offset `k` applied to a row sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalSpec {
    pub offset: u64,
}

/// Output digit `ν` is `1 − digit_at(source[ν], ν + offset)`.
pub fn diagonalize(source: Arc<dyn StreamSequence>, offset: u64) -> DigitStream {
    DigitStream::diagonal(source, offset)
}

/// Persistent sequence with `head` at index 1 and `rest[ν]` at `ν + 1`.
pub struct Prepended {
    head: DigitStream,
    rest: Arc<dyn StreamSequence>,
}

impl StreamSequence for Prepended {
    fn get(&self, index: u64) -> DigitStream {
        assert!(index >= 1, "sequence indices start at 1");
        if index == 1 {
            self.head.clone()
        } else {
            self.rest.get(index - 1)
        }
    }

    fn describe(&self) -> Value {
        json!({ "kind": "prepend", "head": self.head.describe(), "rest": self.rest.describe() })
    }
}

/// New sequence `head, s[1], s[2], …`; `s` itself is left untouched.
pub fn prepend_and_shift(s: Arc<dyn StreamSequence>, head: DigitStream) -> Arc<dyn StreamSequence> {
    Arc::new(Prepended { head, rest: s })
}

/// `T₁ … T_count` with `T₁ = diag(source)` and `T_{j+1}` the plain diagonal
/// of the sequence with `T_j, …, T₁` prepended. Each `T_j` must be proved
/// different from the first `count` source rows and from every earlier `T`.
pub fn recursive_t_sequence(
    source: Arc<dyn StreamSequence>,
    count: usize,
    budget: u64,
) -> Result<Vec<DigitStream>, DiagonalError> {
    if count == 0 {
        return Err(DiagonalError::ZeroCount);
    }
    let mut current = source.clone();
    let mut out: Vec<DigitStream> = Vec::with_capacity(count);
    for _ in 0..count {
        let t = diagonalize(current.clone(), 0);
        current = prepend_and_shift(current, t.clone());
        out.push(t);
    }
    for (j, t) in out.iter().enumerate() {
        for row in 1..=count as u64 {
            if reals_differ(t, &source.get(row), budget) == Separation::Unresolved {
                return Err(DiagonalError::DifferenceUnresolved {
                    generated: j + 1,
                    other: format!("source row {row}"),
                    budget,
                });
            }
        }
        for (i, earlier) in out[..j].iter().enumerate() {
            if reals_differ(t, earlier, budget) == Separation::Unresolved {
                return Err(DiagonalError::DifferenceUnresolved {
                    generated: j + 1,
                    other: format!("T_{}", i + 1),
                    budget,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::RepeatSequence;

    fn zeros() -> Arc<dyn StreamSequence> {
        Arc::new(RepeatSequence(DigitStream::zeros()))
    }

    #[test]
    fn diagonal_flips_constant_rows() {
        assert_eq!(diagonalize(zeros(), 0).prefix_string(8), "11111111");
        let ones: Arc<dyn StreamSequence> = Arc::new(RepeatSequence(DigitStream::ones()));
        assert_eq!(diagonalize(ones, 3).prefix_string(8), "00000000");
    }

    #[test]
    fn prepend_is_persistent() {
        let base = zeros();
        let t1 = DigitStream::liouville();
        let s = prepend_and_shift(base.clone(), t1.clone());
        assert!(s.get(1).same_handle(&t1));
        assert!(s.get(2).same_handle(&base.get(1)));
        // original still reads its own first element
        assert_eq!(base.get(1).prefix_string(4), "0000");
    }

    #[test]
    fn two_step_recursion_over_zeros() {
        let ts = recursive_t_sequence(zeros(), 2, 64).unwrap();
        assert_eq!(ts[0].prefix_string(6), "111111");
        assert_eq!(ts[1].prefix_string(6), "011111");
        let ts = recursive_t_sequence(zeros(), 1, 64).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].prefix_string(6), "111111");
    }

    #[test]
    fn second_t_differs_from_shifted_rows() {
        let base = zeros();
        let ts = recursive_t_sequence(base.clone(), 2, 64).unwrap();
        assert_ne!(ts[1].digit_at(1), ts[0].digit_at(1));
        for nu in 1..20u64 {
            assert_ne!(ts[1].digit_at(nu + 1), base.get(nu).digit_at(nu + 1));
        }
    }

    #[test]
    fn unresolved_budget_is_reported() {
        // rows equal to 0.0111… (= 1/2): the diagonal is 0.1000… = 1/2 again
        // for rows beyond the first, so a tiny budget cannot separate.
        let twin: Arc<dyn StreamSequence> = Arc::new(RepeatSequence(DigitStream::pattern(vec![0], 1)));
        let err = recursive_t_sequence(twin, 1, 1).unwrap_err();
        assert!(matches!(err, DiagonalError::DifferenceUnresolved { generated: 1, .. }));
        assert_eq!(recursive_t_sequence(zeros(), 0, 8).unwrap_err(), DiagonalError::ZeroCount);
    }
}
