use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Label, LabeledSeq, TokenSeq};
use crate::error::{Error, Result};

/// Parses one line of the `word[0] word[1] ...` annotation format.
pub fn parse_annotation_line(line: &str) -> Result<LabeledSeq> {
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for (index, piece) in line.split_whitespace().enumerate() {
        let err = |message: &str| Error::Parse {
            index,
            message: format!("{message} in {piece:?}"),
        };
        let (word, label) = if let Some(w) = piece.strip_suffix("[0]") {
            (w, 0)
        } else if let Some(w) = piece.strip_suffix("[1]") {
            (w, 1)
        } else {
            return Err(err("expected a [0] or [1] suffix"));
        };
        if word.is_empty() {
            return Err(err("empty word"));
        }
        if word.contains(['[', ']']) {
            return Err(err("bracket inside word"));
        }
        tokens.push(word.to_owned());
        labels.push(label);
    }
    if tokens.is_empty() {
        return Err(Error::Parse {
            index: 0,
            message: "empty line".into(),
        });
    }
    let tokens = TokenSeq::new(tokens).map_err(|e| Error::Parse {
        index: 0,
        message: e.to_string(),
    })?;
    LabeledSeq::new(tokens, labels)
}

/// Canonical single-space-separated form of `seq`.
pub fn serialize_annotation_line(seq: &LabeledSeq) -> Result<String> {
    let mut out = String::new();
    for (index, (tok, label)) in seq.tokens().iter().zip(seq.labels()).enumerate() {
        if tok.contains(['[', ']']) {
            return Err(Error::Serialize {
                index,
                token: tok.clone(),
                message: "tokens may not contain '[' or ']'",
            });
        }
        if index > 0 {
            out.push(' ');
        }
        out.push_str(tok);
        out.push('[');
        out.push(if *label == 1 { '1' } else { '0' });
        out.push(']');
    }
    Ok(out)
}

/// Reads an annotation file, one sentence per line. Blank lines are rejected
/// so that line numbers stay aligned across annotators.
pub fn load_annotation_file(path: impl AsRef<Path>) -> Result<Vec<LabeledSeq>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let seq = parse_annotation_line(&line).map_err(|e| Error::Input {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(seq);
    }
    Ok(out)
}

pub fn write_annotation_file(path: impl AsRef<Path>, seqs: &[LabeledSeq]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for seq in seqs {
        let line = serialize_annotation_line(seq)?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-position majority label across annotators. A position is labeled 1
/// only when strictly more than half of the annotators marked it; ties go to 0.
pub fn majority_vote<L: AsRef<[Label]>>(annotations: &[L]) -> Result<Vec<Label>> {
    let first = annotations
        .first()
        .ok_or_else(|| Error::Invalid("majority vote needs at least one annotator".into()))?
        .as_ref();
    let mut ones = vec![0usize; first.len()];
    for a in annotations {
        let a = a.as_ref();
        if a.len() != first.len() {
            return Err(Error::LengthMismatch {
                what: "annotator label lists",
                left: first.len(),
                right: a.len(),
            });
        }
        super::check_labels(a)?;
        for (count, &l) in ones.iter_mut().zip(a) {
            *count += l as usize;
        }
    }
    let n = annotations.len();
    Ok(ones.into_iter().map(|c| Label::from(2 * c > n)).collect())
}

/// Sentence-level judgement given by an annotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentenceRating {
    Incomprehensible,
    Faithful,
    Hallucinated,
}

impl SentenceRating {
    pub const ALL: [SentenceRating; 3] = [
        SentenceRating::Incomprehensible,
        SentenceRating::Faithful,
        SentenceRating::Hallucinated,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for SentenceRating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "incomprehensible" => Ok(SentenceRating::Incomprehensible),
            "faithful" => Ok(SentenceRating::Faithful),
            "hallucinated" => Ok(SentenceRating::Hallucinated),
            other => Err(Error::Invalid(format!("unknown sentence rating {other:?}"))),
        }
    }
}

impl fmt::Display for SentenceRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentenceRating::Incomprehensible => "incomprehensible",
            SentenceRating::Faithful => "faithful",
            SentenceRating::Hallucinated => "hallucinated",
        })
    }
}

/// The rating chosen by a strict majority of annotators, if any.
pub fn majority_rating(ratings: &[SentenceRating]) -> Option<SentenceRating> {
    SentenceRating::ALL
        .into_iter()
        .find(|r| 2 * ratings.iter().filter(|x| *x == r).count() > ratings.len())
}

/// One machine output judged by several annotators.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub source: Option<TokenSeq>,
    annotations: Vec<LabeledSeq>,
    ratings: Option<Vec<SentenceRating>>,
}

impl AnnotationRecord {
    pub fn new(
        source: Option<TokenSeq>,
        annotations: Vec<LabeledSeq>,
        ratings: Option<Vec<SentenceRating>>,
    ) -> Result<Self> {
        let first = annotations
            .first()
            .ok_or_else(|| Error::Invalid("annotation record needs at least one annotator".into()))?;
        if let Some(k) = annotations.iter().position(|a| a.tokens() != first.tokens()) {
            return Err(Error::Invalid(format!(
                "annotator {k} labels a different token sequence than annotator 0"
            )));
        }
        if let Some(r) = &ratings {
            if r.len() != annotations.len() {
                return Err(Error::LengthMismatch {
                    what: "ratings vs annotators",
                    left: r.len(),
                    right: annotations.len(),
                });
            }
        }
        Ok(AnnotationRecord {
            source,
            annotations,
            ratings,
        })
    }

    pub fn output(&self) -> &TokenSeq {
        self.annotations[0].tokens()
    }

    pub fn annotations(&self) -> &[LabeledSeq] {
        &self.annotations
    }

    pub fn ratings(&self) -> Option<&[SentenceRating]> {
        self.ratings.as_deref()
    }

    pub fn is_incomprehensible(&self) -> bool {
        self.ratings
            .as_deref()
            .and_then(majority_rating)
            .is_some_and(|r| r == SentenceRating::Incomprehensible)
    }

    /// Majority-voted labels over the output tokens.
    pub fn consolidate(&self) -> LabeledSeq {
        let lists: Vec<&[Label]> = self.annotations.iter().map(|a| a.labels()).collect();
        let labels = majority_vote(&lists).expect("validated at construction");
        LabeledSeq::new(self.output().clone(), labels).expect("validated at construction")
    }
}
