use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Confusion counts for the hallucinated class. Merging is associative and
/// commutative, so corpus totals can be reduced in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrfCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl PrfCounts {
    pub fn from_labels(gold: &[Label], pred: &[Label]) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::LengthMismatch {
                what: "gold vs predicted labels",
                left: gold.len(),
                right: pred.len(),
            });
        }
        let mut c = PrfCounts::default();
        for (&g, &p) in gold.iter().zip(pred) {
            match (g, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, 0) => c.fn_ += 1,
                (0, 0) => {}
                _ => return Err(Error::Invalid(format!("labels must be 0 or 1, got ({g}, {p})"))),
            }
        }
        Ok(c)
    }

    pub fn merge(self, other: PrfCounts) -> PrfCounts {
        PrfCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn add(&mut self, gold: &[Label], pred: &[Label]) -> Result<()> {
        *self = self.merge(Self::from_labels(gold, pred)?);
        Ok(())
    }

    pub fn finish(self) -> TokenPrf {
        let predicted = self.tp + self.fp;
        let actual = self.tp + self.fn_;
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, predicted);
        let recall = ratio(self.tp, actual);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        TokenPrf {
            precision,
            recall,
            f1,
            counts: self,
            precision_undefined: predicted == 0,
            recall_undefined: actual == 0,
        }
    }
}

/// Precision, recall and F1 of the hallucinated class.
///
/// With no predicted positives precision is reported as 0 and flagged; with
/// no gold positives the same holds for recall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub counts: PrfCounts,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

pub fn token_prf(gold: &[Label], pred: &[Label]) -> Result<TokenPrf> {
    Ok(PrfCounts::from_labels(gold, pred)?.finish())
}

/// Micro-averaged PRF over `(gold, pred)` pairs.
pub fn corpus_prf<'a, I>(pairs: I) -> Result<TokenPrf>
where
    I: IntoIterator<Item = (&'a [Label], &'a [Label])>,
{
    let mut counts = PrfCounts::default();
    for (g, p) in pairs {
        counts.add(g, p)?;
    }
    Ok(counts.finish())
}
