use crate::error::{Error, Result};

/// Items × categories matrix of rater counts; every row sums to the same
/// number of raters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    rows: Vec<Vec<u32>>,
    raters: u32,
}

impl RatingMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Invalid("rating matrix has no items".into()))?;
        let categories = first.len();
        let raters: u32 = first.iter().sum();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != categories {
                return Err(Error::LengthMismatch {
                    what: "rating matrix row width",
                    left: row.len(),
                    right: categories,
                });
            }
            let s: u32 = row.iter().sum();
            if s != raters {
                return Err(Error::Invalid(format!("item {i} has {s} ratings, item 0 has {raters}")));
            }
        }
        Ok(RatingMatrix { rows, raters })
    }

    /// Builds the matrix from per-rater category assignments:
    /// `assignments[rater][item]` is a category index below `categories`.
    pub fn from_assignments<A: AsRef<[usize]>>(assignments: &[A], categories: usize) -> Result<Self> {
        let items = assignments
            .first()
            .ok_or_else(|| Error::Invalid("no raters".into()))?
            .as_ref()
            .len();
        let mut rows = vec![vec![0u32; categories]; items];
        for (r, a) in assignments.iter().enumerate() {
            let a = a.as_ref();
            if a.len() != items {
                return Err(Error::LengthMismatch {
                    what: "items rated by each rater",
                    left: a.len(),
                    right: items,
                });
            }
            for (row, &c) in rows.iter_mut().zip(a) {
                if c >= categories {
                    return Err(Error::Invalid(format!("rater {r} used category {c} of {categories}")));
                }
                row[c] += 1;
            }
        }
        Self::new(rows)
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    pub fn categories(&self) -> usize {
        self.rows[0].len()
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }
}

/// Fleiss' kappa: `(P̄ - P̄e) / (1 - P̄e)` with mean per-item agreement `P̄`
/// and chance agreement `P̄e` from squared category marginals.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64> {
    if m.items() < 2 {
        return Err(Error::Degenerate("Fleiss' kappa needs at least two items".into()));
    }
    if m.raters() < 2 {
        return Err(Error::Degenerate("Fleiss' kappa needs at least two raters".into()));
    }
    let n = m.raters() as f64;
    let items = m.items() as f64;
    let mut totals = vec![0u64; m.categories()];
    let mut agreement = 0.0;
    for row in m.rows() {
        let mut pairs = 0u64;
        for (t, &c) in totals.iter_mut().zip(row) {
            *t += c as u64;
            pairs += c as u64 * c.saturating_sub(1) as u64;
        }
        agreement += pairs as f64 / (n * (n - 1.0));
    }
    let p_bar = agreement / items;
    let all = items * n;
    let p_e: f64 = totals.iter().map(|&t| (t as f64 / all).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(Error::Degenerate(
            "all ratings fall in one category; chance agreement is 1".into(),
        ));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_example() {
        // P̄ = (1 + 1/3) / 2 = 2/3, P̄e = (5/6)² + (1/6)² = 13/18.
        let m = RatingMatrix::new(vec![vec![3, 0], vec![2, 1]]).unwrap();
        assert!((fleiss_kappa(&m).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement() {
        let m = RatingMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0]]).unwrap();
        assert!((fleiss_kappa(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_category_is_degenerate() {
        let m = RatingMatrix::new(vec![vec![3, 0], vec![3, 0]]).unwrap();
        assert!(matches!(fleiss_kappa(&m), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_raters_always_disagreeing() {
        // Every item split 1/1: P̄ = 0, marginals 1/2 each so P̄e = 1/2, κ = -1.
        let a = [0usize, 1, 0, 1];
        let b = [1usize, 0, 1, 0];
        let m = RatingMatrix::from_assignments(&[a, b], 2).unwrap();
        assert!((fleiss_kappa(&m).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_validation() {
        assert!(RatingMatrix::new(vec![]).is_err());
        assert!(RatingMatrix::new(vec![vec![2, 1], vec![1, 1]]).is_err());
        assert!(RatingMatrix::new(vec![vec![2, 1], vec![3]]).is_err());
        assert!(RatingMatrix::from_assignments(&[vec![0, 2]], 2).is_err());
        let m = RatingMatrix::new(vec![vec![1, 0]]).unwrap();
        assert!(fleiss_kappa(&m).is_err());
    }
}
