use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledSeq, TokenSeq};
use crate::error::{Error, Result};

/// One step of an edit script turning a hallucinated sequence (indexed by
/// `i`) into its base sequence (indexed by `j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditOp {
    Match {
        i: usize,
        j: usize,
    },
    Substitute {
        i: usize,
        j: usize,
    },
    /// `i` has no counterpart in the base sequence.
    Delete {
        i: usize,
    },
    /// `j` is missing from the hallucinated sequence.
    Insert {
        j: usize,
    },
}

impl EditOp {
    pub fn cost(self) -> usize {
        match self {
            EditOp::Match { .. } => 0,
            _ => 1,
        }
    }

    /// Whether the op marks a hallucinated position on the `i` side.
    pub fn labels_hallucination(self) -> Option<usize> {
        match self {
            EditOp::Substitute { i, .. } | EditOp::Delete { i } => Some(i),
            _ => None,
        }
    }
}

/// A minimal unit-cost edit script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
    pub total_cost: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditScript {
    pub fn counts(&self) -> OpCounts {
        let mut c = OpCounts::default();
        for op in &self.ops {
            match op {
                EditOp::Match { .. } => c.matches += 1,
                EditOp::Substitute { .. } => c.substitutions += 1,
                EditOp::Delete { .. } => c.deletions += 1,
                EditOp::Insert { .. } => c.insertions += 1,
            }
        }
        c
    }

    /// Per-position labels for a first sequence of length `len`: 1 where the
    /// script deletes or substitutes.
    pub fn hallucination_labels(&self, len: usize) -> Vec<Label> {
        let mut labels = vec![0; len];
        for op in &self.ops {
            if let Some(i) = op.labels_hallucination() {
                labels[i] = 1;
            }
        }
        labels
    }
}

/// Minimal script turning `a` into `b`.
///
/// Among equally cheap scripts the backtrace from the end of both sequences
/// prefers, at every step, match, then substitute, then delete, then insert.
pub fn edit_script_by<T: PartialEq>(a: &[T], b: &[T]) -> EditScript {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut d = vec![0u32; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i as u32;
    }
    for (j, v) in d.iter_mut().take(w).enumerate() {
        *v = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + u32::from(a[i - 1] != b[j - 1]);
            let up = d[(i - 1) * w + j] + 1;
            let left = d[i * w + j - 1] + 1;
            d[i * w + j] = diag.min(up).min(left);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let diag = d[(i - 1) * w + j - 1];
            if a[i - 1] == b[j - 1] && diag == here {
                ops.push(EditOp::Match { i: i - 1, j: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if diag + 1 == here {
                ops.push(EditOp::Substitute { i: i - 1, j: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * w + j] + 1 == here {
            ops.push(EditOp::Delete { i: i - 1 });
            i -= 1;
        } else {
            debug_assert!(j > 0 && d[i * w + j - 1] + 1 == here);
            ops.push(EditOp::Insert { j: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    EditScript {
        ops,
        total_cost: d[n * w + m] as usize,
    }
}

/// Minimal script turning the hallucinated sequence `t_prime` into `t`.
pub fn edit_script(t_prime: &TokenSeq, t: &TokenSeq) -> EditScript {
    edit_script_by(t_prime.tokens(), t.tokens())
}

/// Pseudo labels for `t_prime` against its base `t`: every position of
/// `t_prime` that the edit script deletes or substitutes is hallucinated.
pub fn assign_labels(t_prime: &TokenSeq, t: &TokenSeq) -> Result<LabeledSeq> {
    if t_prime.is_empty() {
        return Err(Error::Invalid("cannot label an empty sequence".into()));
    }
    let labels = edit_script(t_prime, t).hallucination_labels(t_prime.len());
    LabeledSeq::new(t_prime.clone(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EditOp::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s).unwrap()
    }

    #[test]
    fn small_scripts() {
        let s = edit_script(&seq("a"), &seq("a"));
        assert_eq!(s.ops, [Match { i: 0, j: 0 }]);
        assert_eq!(s.total_cost, 0);

        let s = edit_script(&seq("a b c"), &seq("a c"));
        assert_eq!(s.ops, [Match { i: 0, j: 0 }, Delete { i: 1 }, Match { i: 2, j: 1 }]);
        assert_eq!(s.total_cost, 1);

        let s = edit_script(&seq(""), &seq("a b"));
        assert_eq!(s.ops, [Insert { j: 0 }, Insert { j: 1 }]);
        assert_eq!(s.total_cost, 2);

        let s = edit_script(&seq("a b"), &seq(""));
        assert_eq!(s.ops, [Delete { i: 0 }, Delete { i: 1 }]);
        assert!(edit_script(&seq(""), &seq("")).ops.is_empty());
    }

    #[test]
    fn insertion_and_substitution_example() {
        let labels = assign_labels(
            &seq("Jerry likes eating apples happily"),
            &seq("Mike likes eating apples"),
        )
        .unwrap();
        assert_eq!(labels.labels(), [1, 0, 0, 0, 1]);
    }

    #[test]
    fn swap_labels_both_sides() {
        let labels = assign_labels(&seq("a b"), &seq("b a")).unwrap();
        assert_eq!(labels.labels(), [1, 1]);
    }

    #[test]
    fn identity_is_all_zero() {
        let t = seq("x y z y x");
        assert_eq!(assign_labels(&t, &t).unwrap().labels(), [0; 5]);
    }

    #[test]
    fn empty_hallucinated_side_is_an_error() {
        assert!(assign_labels(&seq(""), &seq("a")).is_err());
    }

    #[test]
    fn missing_words_are_not_labeled() {
        // Words dropped from the base only show up as insertions.
        let labels = assign_labels(&seq("a c"), &seq("a b c")).unwrap();
        assert_eq!(labels.labels(), [0, 0]);
    }
}
