//! Data model shared by every pipeline stage, plus the on-disk formats for
//! bitext, human annotations and evaluation records.

mod annotation;
mod bitext;
mod records;

pub use annotation::{
    load_annotation_file, majority_rating, majority_vote, parse_annotation_line, serialize_annotation_line,
    write_annotation_file, AnnotationRecord, SentenceRating,
};
pub use bitext::{load_bitext, read_bitext, BitextFormat, BitextReader, BitextRecord};
pub use records::{load_eval_records, read_eval_records, EvalRecord};

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default mask sentinel.
pub const MASK_TOKEN: &str = "<mask>";
/// Separator placed between segments of a training example.
pub const SEP_TOKEN: &str = "<sep>";

const RESERVED: [&str; 2] = [MASK_TOKEN, SEP_TOKEN];

/// A hallucination label: 1 is hallucinated, 0 is faithful.
pub type Label = u8;

pub(crate) fn check_labels(labels: &[Label]) -> Result<()> {
    match labels.iter().position(|&l| l > 1) {
        Some(i) => Err(Error::Invalid(format!(
            "label at position {i} is {}, expected 0 or 1",
            labels[i]
        ))),
        None => Ok(()),
    }
}

/// A tokenized sentence.
///
/// Tokens are never empty and never contain a reserved sentinel. Sequences
/// holding sentinels (noised or concatenated inputs) are plain `Vec<String>`s
/// owned by the types that produce them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::Invalid(format!("token {i} is empty")));
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(Error::Invalid(format!("token {i} ({tok:?}) contains whitespace")));
            }
            if let Some(s) = RESERVED.iter().find(|s| tok.contains(*s)) {
                return Err(Error::Invalid(format!(
                    "token {i} ({tok:?}) contains reserved sentinel {s}"
                )));
            }
        }
        Ok(TokenSeq(tokens))
    }

    /// Splits on whitespace.
    pub fn from_whitespace(text: &str) -> Result<Self> {
        Self::new(text.split_whitespace())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Single-space-joined text.
    pub fn to_text(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        TokenSeq::new(v)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(t: TokenSeq) -> Self {
        t.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A token sequence with one hallucination label per token and, optionally,
/// one hallucination probability per token.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeq {
    tokens: TokenSeq,
    labels: Vec<Label>,
    probs: Option<Vec<f64>>,
}

impl LabeledSeq {
    pub fn new(tokens: TokenSeq, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != tokens.len() {
            return Err(Error::LengthMismatch {
                what: "labels vs tokens",
                left: labels.len(),
                right: tokens.len(),
            });
        }
        check_labels(&labels)?;
        Ok(LabeledSeq {
            tokens,
            labels,
            probs: None,
        })
    }

    pub fn with_probs(mut self, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != self.tokens.len() {
            return Err(Error::LengthMismatch {
                what: "probs vs tokens",
                left: probs.len(),
                right: self.tokens.len(),
            });
        }
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invalid(format!(
                "probability at position {i} is {} (outside [0, 1])",
                probs[i]
            )));
        }
        self.probs = Some(probs);
        Ok(self)
    }

    /// All-zero labels.
    pub fn faithful(tokens: TokenSeq) -> Self {
        let labels = vec![0; tokens.len()];
        LabeledSeq {
            tokens,
            labels,
            probs: None,
        }
    }

    pub fn tokens(&self) -> &TokenSeq {
        &self.tokens
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn probs(&self) -> Option<&[f64]> {
        self.probs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn hallucinated_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn into_parts(self) -> (TokenSeq, Vec<Label>, Option<Vec<f64>>) {
        (self.tokens, self.labels, self.probs)
    }
}
