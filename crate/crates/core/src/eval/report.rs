use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::corpus_level::{corpus_counts, ingest_external_score, record_labels, LabelSource};
use super::prf::PrfCounts;
use super::sentence::{sentence_score_prob, sentence_score_ratio, spearman};
use crate::corpus::EvalRecord;
use crate::error::{Error, Result};

/// Metric report for one system. A metric is `null` when some record lacks
/// its inputs or the value is undefined; `notes` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub tokens: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub tp: Option<u64>,
    pub fp: Option<u64>,
    #[serde(rename = "fn")]
    pub fn_: Option<u64>,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub spearman_prob: Option<f64>,
    pub spearman_ratio: Option<f64>,
    /// Correlation of each ingested external score with the gold ratio.
    pub spearman_external: BTreeMap<String, Option<f64>>,
    pub pct_gold: f64,
    pub pct_pred: Option<f64>,
    pub notes: Vec<String>,
}

fn key(r: &EvalRecord, index: usize) -> u64 {
    r.id.unwrap_or(index as u64)
}

/// Pairs gold records with prediction records by `id` (line index when ids
/// are absent) and copies the predictions onto the gold records.
pub fn join_predictions(gold: &[EvalRecord], pred: &[EvalRecord]) -> Result<Vec<EvalRecord>> {
    let mut by_key: HashMap<u64, &EvalRecord> = HashMap::with_capacity(pred.len());
    for (i, p) in pred.iter().enumerate() {
        if by_key.insert(key(p, i), p).is_some() {
            return Err(Error::Record {
                record_id: key(p, i),
                message: "duplicate id in predictions".into(),
            });
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(gold.len());
    for (i, g) in gold.iter().enumerate() {
        let k = key(g, i);
        if !seen.insert(k) {
            return Err(Error::Record {
                record_id: k,
                message: "duplicate id in gold records".into(),
            });
        }
        let p = by_key.get(&k).ok_or_else(|| Error::Record {
            record_id: k,
            message: "missing from predictions".into(),
        })?;
        if p.output != g.output {
            return Err(Error::Record {
                record_id: k,
                message: "prediction output tokens differ from gold".into(),
            });
        }
        let mut merged = g.clone();
        merged.id = Some(k);
        if p.pred_labels.is_some() || p.pred_probs.is_some() {
            merged.pred_labels = p.pred_labels.clone();
            merged.pred_probs = p.pred_probs.clone();
        }
        if p.external_scores.is_some() {
            merged.external_scores = p.external_scores.clone();
        }
        out.push(merged);
    }
    if let Some((i, extra)) = pred.iter().enumerate().find(|(i, p)| !seen.contains(&key(p, *i))) {
        return Err(Error::Record {
            record_id: key(extra, i),
            message: "prediction has no gold record".into(),
        });
    }
    Ok(out)
}

/// Computes every metric over records that carry gold labels and, where
/// available, predictions and external scores.
pub fn evaluate_records(records: &[EvalRecord]) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::Degenerate("no records to evaluate".into()));
    }
    let mut notes = Vec::new();
    let gold: Vec<Vec<u8>> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.validate()?;
            record_labels(r, LabelSource::Gold).ok_or_else(|| Error::Record {
                record_id: key(r, i),
                message: "missing gold_labels".into(),
            })
        })
        .collect::<Result<_>>()?;
    let gold_counts = corpus_counts(records, LabelSource::Gold)?;
    let human: Vec<f64> = gold.iter().map(|g| sentence_score_ratio(g)).collect::<Result<_>>()?;

    let mut correlate = |name: &str, scores: Option<Vec<f64>>| -> Option<f64> {
        match scores {
            None => {
                notes.push(format!("{name}: not every record carries the required scores"));
                None
            }
            Some(s) => match spearman(&s, &human) {
                Ok(v) => Some(v),
                Err(e) => {
                    notes.push(format!("{name}: {e}"));
                    None
                }
            },
        }
    };

    let preds: Option<Vec<Vec<u8>>> = records.iter().map(|r| record_labels(r, LabelSource::Pred)).collect();
    let mut report = EvalReport {
        records: records.len(),
        tokens: gold_counts.tokens,
        precision: None,
        recall: None,
        f1: None,
        tp: None,
        fp: None,
        fn_: None,
        precision_undefined: false,
        recall_undefined: false,
        spearman_prob: None,
        spearman_ratio: None,
        spearman_external: BTreeMap::new(),
        pct_gold: gold_counts.percentage()?,
        pct_pred: None,
        notes: Vec::new(),
    };

    let prob_scores: Option<Vec<f64>> = records
        .iter()
        .map(|r| r.pred_probs.as_deref().map(sentence_score_prob))
        .collect::<Option<Result<Vec<f64>>>>()
        .transpose()?;
    report.spearman_prob = correlate("spearman_prob", prob_scores);

    match &preds {
        Some(preds) => {
            let mut counts = PrfCounts::default();
            for (g, p) in gold.iter().zip(preds) {
                counts.add(g, p)?;
            }
            let prf = counts.finish();
            report.precision = Some(prf.precision);
            report.recall = Some(prf.recall);
            report.f1 = Some(prf.f1);
            report.tp = Some(counts.tp);
            report.fp = Some(counts.fp);
            report.fn_ = Some(counts.fn_);
            report.precision_undefined = prf.precision_undefined;
            report.recall_undefined = prf.recall_undefined;
            report.pct_pred = Some(corpus_counts(records, LabelSource::Pred)?.percentage()?);
            let ratios = preds
                .iter()
                .map(|p| sentence_score_ratio(p))
                .collect::<Result<Vec<f64>>>()?;
            report.spearman_ratio = correlate("spearman_ratio", Some(ratios));
        }
        None => {
            correlate("token labels", None);
        }
    }

    let names: BTreeSet<&str> = records
        .iter()
        .filter_map(|r| r.external_scores.as_ref())
        .flat_map(|s| s.keys().map(String::as_str))
        .collect();
    for name in names {
        let scores: Option<Vec<f64>> = records.iter().map(|r| ingest_external_score(r, name).ok()).collect();
        let v = correlate(&format!("spearman_external.{name}"), scores);
        report.spearman_external.insert(name.to_owned(), v);
    }
    report.notes = notes;
    Ok(report)
}

/// Joins predictions onto gold records and evaluates them.
pub fn evaluate(gold: &[EvalRecord], pred: &[EvalRecord]) -> Result<EvalReport> {
    evaluate_records(&join_predictions(gold, pred)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenSeq;

    fn rec(id: u64, out: &str, gold: &[u8]) -> EvalRecord {
        let mut r = EvalRecord::new(
            TokenSeq::from_whitespace("s").unwrap(),
            TokenSeq::from_whitespace(out).unwrap(),
        );
        r.id = Some(id);
        r.gold_labels = Some(gold.to_vec());
        r
    }

    fn pred(id: u64, out: &str, labels: &[u8], probs: &[f64]) -> EvalRecord {
        let mut r = EvalRecord::new(
            TokenSeq::from_whitespace("s").unwrap(),
            TokenSeq::from_whitespace(out).unwrap(),
        );
        r.id = Some(id);
        r.pred_labels = Some(labels.to_vec());
        r.pred_probs = Some(probs.to_vec());
        r
    }

    fn gold_set() -> Vec<EvalRecord> {
        vec![
            rec(0, "a b c", &[1, 0, 0]),
            rec(1, "d e", &[1, 1]),
            rec(2, "f g h i", &[0, 0, 0, 1]),
        ]
    }

    #[test]
    fn perfect_prediction_report() {
        let gold = gold_set();
        let preds: Vec<EvalRecord> = gold
            .iter()
            .map(|g| {
                let l = g.gold_labels.clone().unwrap();
                let p: Vec<f64> = l.iter().map(|&x| x as f64).collect();
                pred(g.id.unwrap(), &g.output.to_text(), &l, &p)
            })
            .collect();
        let r = evaluate(&gold, &preds).unwrap();
        assert_eq!(r.f1, Some(1.0));
        assert_eq!(r.pct_pred, Some(r.pct_gold));
        assert!((r.spearman_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.spearman_prob.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shuffled_predictions_give_the_same_report() {
        let gold = gold_set();
        let mut preds = vec![
            pred(0, "a b c", &[1, 1, 0], &[0.9, 0.6, 0.1]),
            pred(1, "d e", &[0, 1], &[0.3, 0.8]),
            pred(2, "f g h i", &[0, 0, 0, 1], &[0.1, 0.1, 0.2, 0.7]),
        ];
        let a = evaluate(&gold, &preds).unwrap();
        preds.reverse();
        let b = evaluate(&gold, &preds).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatches_name_the_first_offending_id() {
        let gold = gold_set();
        let preds = vec![
            pred(0, "a b c", &[0, 0, 0], &[0.0; 3]),
            pred(2, "f g h i", &[0; 4], &[0.0; 4]),
        ];
        match evaluate(&gold, &preds) {
            Err(Error::Record { record_id: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let preds = vec![
            pred(0, "a b c", &[0; 3], &[0.0; 3]),
            pred(1, "d x", &[0; 2], &[0.0; 2]),
            pred(2, "f g h i", &[0; 4], &[0.0; 4]),
        ];
        assert!(matches!(
            evaluate(&gold, &preds),
            Err(Error::Record { record_id: 1, .. })
        ));
        let mut preds = vec![
            pred(0, "a b c", &[0; 3], &[0.0; 3]),
            pred(1, "d e", &[0; 2], &[0.0; 2]),
            pred(2, "f g h i", &[0; 4], &[0.0; 4]),
        ];
        preds.push(pred(9, "z", &[0], &[0.0]));
        assert!(matches!(
            evaluate(&gold, &preds),
            Err(Error::Record { record_id: 9, .. })
        ));
    }

    #[test]
    fn external_scores_only() {
        let gold = gold_set();
        let preds: Vec<EvalRecord> = gold
            .iter()
            .zip([0.8, 0.1, 0.95])
            .map(|(g, pe)| {
                let mut p = EvalRecord::new(g.source.clone(), g.output.clone());
                p.id = g.id;
                p.external_scores = Some([("entailment".to_string(), pe)].into_iter().collect());
                p
            })
            .collect();
        let r = evaluate(&gold, &preds).unwrap();
        assert!(r.f1.is_none());
        assert!(r.spearman_external["entailment"].is_some());
        assert!(!r.notes.is_empty());
    }
}
