use crate::corpus::TokenSeq;
use crate::error::{Error, Result};

/// Similarity between an output token and a source token.
pub trait SimilarityProvider {
    fn similarity(&self, output_token: &str, source_token: &str) -> f64;

    /// Similarity at or below which two tokens are unrelated and never
    /// aligned, if the provider's scale has one.
    fn floor(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(&str, &str) -> f64> SimilarityProvider for F {
    fn similarity(&self, output_token: &str, source_token: &str) -> f64 {
        self(output_token, source_token)
    }
}

/// 1 for identical strings, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl SimilarityProvider for ExactMatch {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        f64::from(u8::from(a == b))
    }

    fn floor(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Relative-position distance used to break similarity ties.
fn skew(i: usize, rows: usize, j: usize, cols: usize) -> f64 {
    let pos = |k: usize, n: usize| (k as f64 + 0.5) / n as f64;
    (pos(i, rows) - pos(j, cols)).abs()
}

/// Index of the best entry; ties go to the entry closest in relative
/// position to `anchor`, then to the lower index.
fn best<I: Iterator<Item = f64>>(values: I, anchor: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, v) in values.enumerate() {
        if v > best_val || (v == best_val && anchor(k) < anchor(best)) {
            best = k;
            best_val = v;
        }
    }
    best
}

/// Fraction of rows (output tokens) whose best column is mutually the best
/// row of that column, counting only pairs above `floor` when given.
pub fn align_score_matrix(sim: &[Vec<f64>], floor: Option<f64>) -> Result<f64> {
    let rows = sim.len();
    let cols = sim.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Invalid("alignment needs non-empty output and source".into()));
    }
    if let Some(r) = sim.iter().position(|row| row.len() != cols) {
        return Err(Error::LengthMismatch {
            what: "similarity matrix row width",
            left: sim[r].len(),
            right: cols,
        });
    }
    if sim.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("similarity matrix has non-finite entries".into()));
    }
    let col_best: Vec<usize> = (0..cols)
        .map(|j| best(sim.iter().map(|row| row[j]), |i| skew(i, rows, j, cols)))
        .collect();
    let aligned = (0..rows)
        .filter(|&i| {
            let j = best(sim[i].iter().copied(), |j| skew(i, rows, j, cols));
            col_best[j] == i && floor.is_none_or(|f| sim[i][j] > f)
        })
        .count();
    Ok(aligned as f64 / rows as f64)
}

/// Faithfulness score of `output` against `source`: the fraction of output
/// tokens that are mutual-argmax aligned to a source token. Higher is more
/// faithful.
pub fn align_score<S: SimilarityProvider + ?Sized>(output: &TokenSeq, source: &TokenSeq, sim: &S) -> Result<f64> {
    let matrix: Vec<Vec<f64>> = output
        .iter()
        .map(|o| source.iter().map(|s| sim.similarity(o, s)).collect())
        .collect();
    align_score_matrix(&matrix, sim.floor())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s).unwrap()
    }

    /// Brute force: for every pair check it dominates its row and column.
    fn brute(sim: &[Vec<f64>]) -> f64 {
        let mut aligned = 0;
        for i in 0..sim.len() {
            for j in 0..sim[0].len() {
                let row_max = sim[i].iter().all(|&v| v <= sim[i][j]);
                let col_max = sim.iter().all(|r| r[j] <= sim[i][j]);
                let row_unique = sim[i].iter().filter(|&&v| v == sim[i][j]).count() == 1;
                let col_unique = sim.iter().filter(|r| r[j] == sim[i][j]).count() == 1;
                if row_max && col_max && row_unique && col_unique {
                    aligned += 1;
                    break;
                }
            }
        }
        aligned as f64 / sim.len() as f64
    }

    #[test]
    fn three_by_three() {
        let sim = vec![vec![0.9, 0.1, 0.1], vec![0.1, 0.8, 0.1], vec![0.2, 0.1, 0.05]];
        assert_eq!(align_score_matrix(&sim, None).unwrap(), 2.0 / 3.0);
        assert_eq!(brute(&sim), 2.0 / 3.0);
    }

    #[test]
    fn identity_similarity() {
        let s = seq("a b c b a");
        assert_eq!(align_score(&s, &s, &ExactMatch).unwrap(), 1.0);
        assert_eq!(align_score(&seq("x y"), &seq("a b c"), &ExactMatch).unwrap(), 0.0);
        assert_eq!(align_score(&seq("a"), &seq("a"), &ExactMatch).unwrap(), 1.0);
        assert_eq!(align_score(&seq("a x"), &seq("a y"), &ExactMatch).unwrap(), 0.5);
    }

    #[test]
    fn closures_work_as_providers() {
        let sim = |a: &str, b: &str| -((a.len() as f64) - (b.len() as f64)).abs();
        let s = align_score(&seq("aa b"), &seq("cc d"), &sim).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(align_score_matrix(&[], None).is_err());
        assert!(align_score_matrix(&[vec![1.0], vec![1.0, 2.0]], None).is_err());
        assert!(align_score_matrix(&[vec![f64::NAN]], None).is_err());
        assert!(align_score(&seq(""), &seq("a"), &ExactMatch).is_err());
    }
}
