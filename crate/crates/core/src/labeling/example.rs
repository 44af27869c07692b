use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledSeq, TokenSeq, MASK_TOKEN, SEP_TOKEN};
use crate::error::{Error, Result};

/// Training-example assembly settings. `alpha` is not used here; it is
/// carried through to the trainer as the weight of the masked-LM loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dropout_rate: f64,
    pub mlm_mask_prob: f64,
    pub alpha: f64,
    /// Mask source tokens in the masked-LM companion as well as target tokens.
    pub mask_source: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dropout_rate: 0.3,
            mlm_mask_prob: 0.3,
            alpha: 0.6,
            mask_source: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dropout rate", self.dropout_rate),
            ("MLM mask probability", self.mlm_mask_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("{name} {v} outside [0, 1]")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Source,
    Separator,
    Reference,
    Target,
}

/// `[source, SEP, reference after dropout, SEP, hallucinated target]` with
/// labels over the hallucinated target only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pieces: Vec<String>,
    segments: Vec<Segment>,
    labels: Vec<Label>,
}

impl TrainingExample {
    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Labels of the target segment, in order.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn segment_tokens(&self, which: Segment) -> Vec<&str> {
        self.pieces
            .iter()
            .zip(&self.segments)
            .filter(|(_, s)| **s == which)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn target_range(&self) -> Range<usize> {
        let start = self.segments.len() - self.labels.len();
        start..self.segments.len()
    }

    /// Label at a position of the full sequence; `None` outside the target.
    pub fn label_at(&self, position: usize) -> Option<Label> {
        let r = self.target_range();
        r.contains(&position).then(|| self.labels[position - r.start])
    }
}

pub fn make_training_example<R: Rng + ?Sized>(
    source: &TokenSeq,
    reference: &TokenSeq,
    target: &LabeledSeq,
    cfg: &TrainConfig,
    rng: &mut R,
) -> TrainingExample {
    let kept: Vec<&String> = reference
        .iter()
        .filter(|_| rng.gen::<f64>() >= cfg.dropout_rate)
        .collect();
    let total = source.len() + kept.len() + target.len() + 2;
    let mut pieces = Vec::with_capacity(total);
    let mut segments = Vec::with_capacity(total);
    let mut push = |tok: &str, seg: Segment| {
        pieces.push(tok.to_owned());
        segments.push(seg);
    };
    for t in source.iter() {
        push(t, Segment::Source);
    }
    push(SEP_TOKEN, Segment::Separator);
    for t in kept {
        push(t, Segment::Reference);
    }
    push(SEP_TOKEN, Segment::Separator);
    for t in target.tokens().iter() {
        push(t, Segment::Target);
    }
    TrainingExample {
        pieces,
        segments,
        labels: target.labels().to_vec(),
    }
}

/// `[source, SEP, target]` with some tokens replaced by the mask sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlmExample {
    pub masked_pieces: Vec<String>,
    pub mask_positions: Vec<usize>,
    pub originals: Vec<String>,
}

impl MlmExample {
    /// The unmasked sequence.
    pub fn restore(&self) -> Vec<String> {
        let mut out = self.masked_pieces.clone();
        for (&p, o) in self.mask_positions.iter().zip(&self.originals) {
            out[p] = o.clone();
        }
        out
    }
}

pub fn make_mlm_example<R: Rng + ?Sized>(
    source: &TokenSeq,
    target: &TokenSeq,
    cfg: &TrainConfig,
    rng: &mut R,
) -> MlmExample {
    let mut masked_pieces = Vec::with_capacity(source.len() + target.len() + 1);
    let mut mask_positions = Vec::new();
    let mut originals = Vec::new();
    let mut visit = |tok: &String, maskable: bool, masked_pieces: &mut Vec<String>| {
        let pos = masked_pieces.len();
        if maskable && rng.gen::<f64>() < cfg.mlm_mask_prob {
            mask_positions.push(pos);
            originals.push(tok.clone());
            masked_pieces.push(MASK_TOKEN.to_owned());
        } else {
            masked_pieces.push(tok.clone());
        }
    };
    for t in source.iter() {
        visit(t, cfg.mask_source, &mut masked_pieces);
    }
    masked_pieces.push(SEP_TOKEN.to_owned());
    for t in target.iter() {
        visit(t, true, &mut masked_pieces);
    }
    MlmExample {
        masked_pieces,
        mask_positions,
        originals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{record_rng, Stream};

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s).unwrap()
    }

    fn example(dropout: f64) -> TrainingExample {
        let t_prime = LabeledSeq::new(seq("x b c"), vec![1, 0, 0]).unwrap();
        let cfg = TrainConfig {
            dropout_rate: dropout,
            ..TrainConfig::default()
        };
        make_training_example(
            &seq("s1 s2"),
            &seq("a b c"),
            &t_prime,
            &cfg,
            &mut record_rng(0, 0, Stream::Dropout),
        )
    }

    #[test]
    fn dropout_extremes() {
        let e = example(1.0);
        assert!(e.segment_tokens(Segment::Reference).is_empty());
        assert_eq!(e.pieces(), ["s1", "s2", SEP_TOKEN, SEP_TOKEN, "x", "b", "c"]);

        let e = example(0.0);
        assert_eq!(e.segment_tokens(Segment::Reference), ["a", "b", "c"]);
        assert_eq!(e.segment_tokens(Segment::Source), ["s1", "s2"]);
        assert_eq!(e.segment_tokens(Segment::Target), ["x", "b", "c"]);
        assert_eq!(e.target_range(), 7..10);
        assert_eq!(e.label_at(7), Some(1));
        assert_eq!(e.label_at(9), Some(0));
        assert_eq!(e.label_at(2), None);
        assert_eq!(e.label_at(6), None);
    }

    #[test]
    fn dropout_rate_is_respected() {
        let t = TokenSeq::new((0..10_000).map(|i| format!("t{i}"))).unwrap();
        let t_prime = LabeledSeq::faithful(seq("y"));
        let cfg = TrainConfig {
            dropout_rate: 0.5,
            ..TrainConfig::default()
        };
        let e = make_training_example(&seq("s"), &t, &t_prime, &cfg, &mut record_rng(3, 0, Stream::Dropout));
        let kept = e.segment_tokens(Segment::Reference).len() as f64 / 10_000.0;
        assert!((kept - 0.5).abs() < 0.02, "{kept}");
    }

    #[test]
    fn mlm_extremes() {
        let mut cfg = TrainConfig {
            mlm_mask_prob: 0.0,
            ..TrainConfig::default()
        };
        let mut rng = record_rng(1, 0, Stream::Mlm);
        let e = make_mlm_example(&seq("a b"), &seq("c"), &cfg, &mut rng);
        assert!(e.mask_positions.is_empty());
        assert_eq!(e.masked_pieces, ["a", "b", SEP_TOKEN, "c"]);

        cfg.mlm_mask_prob = 1.0;
        let e = make_mlm_example(&seq("a b"), &seq("c"), &cfg, &mut rng);
        assert_eq!(e.mask_positions, [0, 1, 3]);
        assert_eq!(e.originals, ["a", "b", "c"]);
        assert_eq!(e.restore(), ["a", "b", SEP_TOKEN, "c"]);

        cfg.mask_source = false;
        let e = make_mlm_example(&seq("a b"), &seq("c"), &cfg, &mut rng);
        assert_eq!(e.mask_positions, [3]);
    }

    #[test]
    fn mlm_mask_fraction() {
        let t = TokenSeq::new((0..20_000).map(|i| format!("t{i}"))).unwrap();
        let cfg = TrainConfig::default();
        let e = make_mlm_example(&seq("s"), &t, &cfg, &mut record_rng(2, 0, Stream::Mlm));
        let n = 20_001.0;
        let frac = e.mask_positions.len() as f64 / n;
        let sigma = (0.3f64 * 0.7 / n).sqrt();
        assert!((frac - 0.3).abs() < 4.0 * sigma, "{frac}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig {
            alpha: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            dropout_rate: -0.1,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }
}
