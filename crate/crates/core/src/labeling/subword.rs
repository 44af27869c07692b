use std::ops::Range;

use crate::corpus::Label;
use crate::error::{Error, Result};

/// For every word, the contiguous range of subword positions it spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordMap {
    ranges: Vec<Range<usize>>,
}

impl SubwordMap {
    /// Ranges must be non-empty, in order, and tile `0..n` without gaps.
    pub fn new(ranges: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for (w, r) in ranges.iter().enumerate() {
            if r.start != next {
                return Err(Error::Invalid(format!(
                    "word {w} starts at subword {}, expected {next}",
                    r.start
                )));
            }
            if r.end <= r.start {
                return Err(Error::Invalid(format!("word {w} has no subwords")));
            }
            next = r.end;
        }
        Ok(SubwordMap { ranges })
    }

    /// From inclusive `(first, last)` subword pairs.
    pub fn from_inclusive(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(a, b)| a..b + 1).collect())
    }

    /// From the number of subwords in each word.
    pub fn from_piece_counts(counts: &[usize]) -> Result<Self> {
        let mut start = 0;
        let ranges = counts
            .iter()
            .map(|&c| {
                let r = start..start + c;
                start += c;
                r
            })
            .collect();
        Self::new(ranges)
    }

    /// WordPiece-style segmentation: pieces starting with `prefix` continue
    /// the previous word.
    pub fn from_continuation_prefix<S: AsRef<str>>(pieces: &[S], prefix: &str) -> Result<Self> {
        Self::group(pieces, |p| !p.starts_with(prefix))
    }

    /// SentencePiece-style segmentation: pieces starting with `marker` open
    /// a new word. The first piece always opens one.
    pub fn from_word_start_marker<S: AsRef<str>>(pieces: &[S], marker: &str) -> Result<Self> {
        Self::group(pieces, |p| p.starts_with(marker))
    }

    fn group<S: AsRef<str>>(pieces: &[S], starts_word: impl Fn(&str) -> bool) -> Result<Self> {
        let mut ranges: Vec<Range<usize>> = Vec::new();
        for (k, p) in pieces.iter().enumerate() {
            match ranges.last_mut() {
                Some(last) if !starts_word(p.as_ref()) => last.end = k + 1,
                _ => ranges.push(k..k + 1),
            }
        }
        Self::new(ranges)
    }

    pub fn word_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn subword_count(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    fn check_coverage(&self, len: usize) -> Result<()> {
        if len != self.subword_count() {
            return Err(Error::LengthMismatch {
                what: "subword predictions vs subword map",
                left: len,
                right: self.subword_count(),
            });
        }
        Ok(())
    }

    /// Copies each word's label onto all of its subwords.
    pub fn expand<T: Copy>(&self, word_values: &[T]) -> Result<Vec<T>> {
        if word_values.len() != self.word_count() {
            return Err(Error::LengthMismatch {
                what: "word values vs subword map",
                left: word_values.len(),
                right: self.word_count(),
            });
        }
        Ok(self
            .ranges
            .iter()
            .zip(word_values)
            .flat_map(|(r, &v)| std::iter::repeat_n(v, r.len()))
            .collect())
    }
}

/// A word is hallucinated if any of its subwords is.
pub fn project_word_labels(subword_labels: &[Label], map: &SubwordMap) -> Result<Vec<Label>> {
    map.check_coverage(subword_labels.len())?;
    Ok(map
        .ranges
        .iter()
        .map(|r| Label::from(subword_labels[r.clone()].contains(&1)))
        .collect())
}

/// A word's hallucination probability is the largest of its subwords'.
pub fn project_word_probs(subword_probs: &[f64], map: &SubwordMap) -> Result<Vec<f64>> {
    map.check_coverage(subword_probs.len())?;
    Ok(map
        .ranges
        .iter()
        .map(|r| {
            subword_probs[r.clone()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}
