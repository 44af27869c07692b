use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_labels, Label, TokenSeq};
use crate::error::{Error, Result};

/// One evaluation unit: a machine output with gold and/or predicted labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    #[serde(default, with = "space_joined")]
    pub source: TokenSeq,
    #[serde(with = "space_joined")]
    pub output: TokenSeq,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_labels: Option<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_scores: Option<BTreeMap<String, f64>>,
}

impl EvalRecord {
    pub fn new(source: TokenSeq, output: TokenSeq) -> Self {
        EvalRecord {
            id: None,
            source,
            output,
            gold_labels: None,
            pred_labels: None,
            pred_probs: None,
            external_scores: None,
        }
    }

    /// Checks that every per-token list matches the output length.
    pub fn validate(&self) -> Result<()> {
        let n = self.output.len();
        let check = |what: &'static str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(Error::LengthMismatch {
                    what,
                    left: len,
                    right: n,
                })
            }
        };
        if let Some(g) = &self.gold_labels {
            check("gold_labels vs output", g.len())?;
            check_labels(g)?;
        }
        if let Some(p) = &self.pred_labels {
            check("pred_labels vs output", p.len())?;
            check_labels(p)?;
        }
        if let Some(p) = &self.pred_probs {
            check("pred_probs vs output", p.len())?;
            if let Some(i) = p.iter().position(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::Invalid(format!("pred_probs[{i}] = {} outside [0, 1]", p[i])));
            }
        }
        if let Some(scores) = &self.external_scores {
            if let Some((k, v)) = scores.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Invalid(format!("external score {k} is {v}")));
            }
        }
        Ok(())
    }
}

pub fn read_eval_records<R: BufRead>(reader: R, origin: &str) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Input {
            path: origin.to_owned(),
            line: n + 1,
            message,
        };
        let rec: EvalRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        rec.validate().map_err(|e| err(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_eval_records(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_eval_records(BufReader::new(file), &path.display().to_string())
}

/// Token sequences stored as single-space-joined strings.
pub(crate) mod space_joined {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::corpus::TokenSeq;

    pub fn serialize<S: Serializer>(seq: &TokenSeq, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&seq.to_text())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TokenSeq, D::Error> {
        let text = String::deserialize(d)?;
        TokenSeq::from_whitespace(&text).map_err(serde::de::Error::custom)
    }
}
