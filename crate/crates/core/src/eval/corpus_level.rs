use serde::{Deserialize, Serialize};

use super::sentence::threshold_probs;
use crate::corpus::{EvalRecord, Label};
use crate::error::{Error, Result};

/// Score name whose value is an entailment probability.
pub const ENTAILMENT: &str = "entailment";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Pred,
}

fn record_name(r: &EvalRecord, index: usize) -> String {
    match r.id {
        Some(id) => format!("record {id}"),
        None => format!("record #{index}"),
    }
}

/// The requested labels of a record. Predicted probabilities are thresholded
/// when hard predicted labels are absent.
pub fn record_labels(r: &EvalRecord, which: LabelSource) -> Option<Vec<Label>> {
    match which {
        LabelSource::Gold => r.gold_labels.clone(),
        LabelSource::Pred => r
            .pred_labels
            .clone()
            .or_else(|| r.pred_probs.as_deref().map(threshold_probs)),
    }
}

/// Pooled hallucinated-token counts; merging is order independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PctCounts {
    pub hallucinated: u64,
    pub tokens: u64,
}

impl PctCounts {
    pub fn merge(self, o: PctCounts) -> PctCounts {
        PctCounts {
            hallucinated: self.hallucinated + o.hallucinated,
            tokens: self.tokens + o.tokens,
        }
    }

    pub fn add_labels(&mut self, labels: &[Label]) {
        self.hallucinated += labels.iter().filter(|&&l| l == 1).count() as u64;
        self.tokens += labels.len() as u64;
    }

    pub fn percentage(self) -> Result<f64> {
        if self.tokens == 0 {
            return Err(Error::Degenerate("no tokens to count".into()));
        }
        Ok(100.0 * self.hallucinated as f64 / self.tokens as f64)
    }
}

pub fn corpus_counts<'a, I>(records: I, which: LabelSource) -> Result<PctCounts>
where
    I: IntoIterator<Item = &'a EvalRecord>,
{
    let mut counts = PctCounts::default();
    for (i, r) in records.into_iter().enumerate() {
        let labels = record_labels(r, which).ok_or_else(|| {
            let kind = match which {
                LabelSource::Gold => "gold",
                LabelSource::Pred => "predicted",
            };
            Error::Invalid(format!("{} has no {kind} labels", record_name(r, i)))
        })?;
        counts.add_labels(&labels);
    }
    Ok(counts)
}

/// Percentage of hallucinated tokens pooled over the corpus.
pub fn corpus_hallucination_pct<'a, I>(records: I, which: LabelSource) -> Result<f64>
where
    I: IntoIterator<Item = &'a EvalRecord>,
{
    corpus_counts(records, which)?.percentage()
}

/// A hallucination score from an externally computed value. Entailment
/// probabilities are turned into `1 - p`; other scores pass through.
pub fn ingest_external_score(record: &EvalRecord, name: &str) -> Result<f64> {
    let value = record
        .external_scores
        .as_ref()
        .and_then(|s| s.get(name))
        .copied()
        .ok_or_else(|| Error::Invalid(format!("external score {name:?} missing")))?;
    Ok(if name == ENTAILMENT { 1.0 - value } else { value })
}
