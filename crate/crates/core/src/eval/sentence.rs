use crate::corpus::Label;
use crate::error::{Error, Result};

/// Probabilities at or above this are hallucinated when hard labels are needed.
pub const DECISION_THRESHOLD: f64 = 0.5;

pub fn threshold_probs(probs: &[f64]) -> Vec<Label> {
    probs.iter().map(|&p| Label::from(p >= DECISION_THRESHOLD)).collect()
}

/// Mean token hallucination probability.
pub fn sentence_score_prob(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Invalid("sentence score of an empty sentence".into()));
    }
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

/// Fraction of tokens labeled hallucinated.
pub fn sentence_score_ratio(labels: &[Label]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Invalid("sentence score of an empty sentence".into()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(ones as f64 / labels.len() as f64)
}

/// Ratio score after thresholding probabilities into hard labels.
pub fn sentence_score_ratio_from_probs(probs: &[f64]) -> Result<f64> {
    sentence_score_ratio(&threshold_probs(probs))
}

/// Average 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "spearman inputs",
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate("spearman needs at least two observations".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::Invalid("spearman input contains NaN".into()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
        .ok_or_else(|| Error::Degenerate("spearman of a constant sequence".into()))
}
