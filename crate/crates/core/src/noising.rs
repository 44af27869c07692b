//! Word-level corruption of target sentences: random masking, random
//! replacement from the corpus vocabulary and random insertion of masks.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BitextRecord, TokenSeq};
use crate::error::{Error, Result};

/// Noise recipe. Per sentence, the mask fraction is drawn from
/// `[0, mask_upper]` and the replacement probability from `[0, replace_upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mask_upper: f64,
    pub replace_upper: f64,
    pub insert_rate: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            mask_upper: 0.6,
            replace_upper: 0.3,
            insert_rate: 0.2,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mask upper bound", self.mask_upper),
            ("replacement upper bound", self.replace_upper),
            ("insertion rate", self.insert_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Noise rates drawn for one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledRates {
    pub mask: f64,
    pub replace: f64,
}

pub fn sample_rates<R: Rng + ?Sized>(config: &NoiseConfig, rng: &mut R) -> SampledRates {
    let mask = rng.gen::<f64>() * config.mask_upper;
    let replace = rng.gen::<f64>() * config.replace_upper;
    SampledRates { mask, replace }
}

/// What happened to a position of the noised sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Kept,
    Masked,
    Replaced,
    InsertedMask,
}

/// One position of a noised sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Kept(String),
    Masked {
        original: String,
    },
    Replaced {
        original: String,
        replacement: String,
    },
    InsertedMask,
    /// A token whose provenance is unknown, e.g. read back from a file.
    /// It may be the mask sentinel.
    Unattributed(String),
}

impl Slot {
    pub fn origin(&self) -> Option<Origin> {
        match self {
            Slot::Kept(_) => Some(Origin::Kept),
            Slot::Masked { .. } => Some(Origin::Masked),
            Slot::Replaced { .. } => Some(Origin::Replaced),
            Slot::InsertedMask => Some(Origin::InsertedMask),
            Slot::Unattributed(_) => None,
        }
    }

    pub fn is_mask(&self, sentinel: &str) -> bool {
        match self {
            Slot::Masked { .. } | Slot::InsertedMask => true,
            Slot::Unattributed(t) => t == sentinel,
            _ => false,
        }
    }

    /// Surface token, with masks rendered as `sentinel`.
    pub fn surface<'a>(&'a self, sentinel: &'a str) -> &'a str {
        match self {
            Slot::Kept(t) | Slot::Unattributed(t) => t,
            Slot::Replaced { replacement, .. } => replacement,
            Slot::Masked { .. } | Slot::InsertedMask => sentinel,
        }
    }
}

/// A corrupted sentence together with the provenance of every position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NoisedSeq {
    slots: Vec<Slot>,
}

impl NoisedSeq {
    pub fn from_slots(slots: Vec<Slot>) -> Self {
        NoisedSeq { slots }
    }

    /// A noised sequence without provenance, as received from outside.
    pub fn from_rendered<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        NoisedSeq {
            slots: tokens.into_iter().map(|t| Slot::Unattributed(t.into())).collect(),
        }
    }

    /// Unchanged copy of `tokens`.
    pub fn clean(tokens: &TokenSeq) -> Self {
        NoisedSeq {
            slots: tokens.iter().cloned().map(Slot::Kept).collect(),
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn render(&self, sentinel: &str) -> Vec<String> {
        self.slots.iter().map(|s| s.surface(sentinel).to_owned()).collect()
    }

    /// `None` when any position lacks provenance.
    pub fn origin_map(&self) -> Option<Vec<Origin>> {
        self.slots.iter().map(Slot::origin).collect()
    }

    pub fn count(&self, origin: Origin) -> usize {
        self.slots.iter().filter(|s| s.origin() == Some(origin)).count()
    }

    /// Number of positions that correspond to an input token.
    pub fn non_inserted_len(&self) -> usize {
        self.slots.len() - self.count(Origin::InsertedMask)
    }

    /// The pre-noise tokens, if provenance is complete.
    pub fn original_tokens(&self) -> Option<Vec<&str>> {
        self.slots
            .iter()
            .filter_map(|s| match s {
                Slot::Kept(t) => Some(Some(t.as_str())),
                Slot::Masked { original } | Slot::Replaced { original, .. } => Some(Some(original.as_str())),
                Slot::InsertedMask => None,
                Slot::Unattributed(_) => Some(None),
            })
            .collect()
    }
}

/// Unigram token counts of the target side of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    cumulative: Vec<u64>,
}

impl Vocab {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Result<Self> {
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        if counts.is_empty() {
            return Err(Error::Invalid("vocabulary is empty".into()));
        }
        let mut total = 0u64;
        let mut tokens = Vec::with_capacity(counts.len());
        let mut cs = Vec::with_capacity(counts.len());
        let mut cumulative = Vec::with_capacity(counts.len());
        for (tok, c) in counts {
            total += c;
            tokens.push(tok);
            cs.push(c);
            cumulative.push(total);
        }
        Ok(Vocab {
            tokens,
            counts: cs,
            cumulative,
        })
    }

    pub fn from_sequences<'a, I>(seqs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        let mut counts = BTreeMap::new();
        for seq in seqs {
            for tok in seq.iter() {
                *counts.entry(tok.clone()).or_insert(0u64) += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn total(&self) -> u64 {
        *self.cumulative.last().expect("vocab is non-empty")
    }

    pub fn count(&self, token: &str) -> u64 {
        self.index_of(token).map_or(0, |i| self.counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    fn index_of(&self, token: &str) -> Option<usize> {
        self.tokens.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }

    fn pick(&self, ticket: u64) -> usize {
        self.cumulative.partition_point(|&c| c <= ticket)
    }

    /// Draws a token with probability proportional to its count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        let i = self.pick(rng.gen_range(0..self.total()));
        &self.tokens[i]
    }

    /// Draws a token proportional to its count among tokens not in `exclude`.
    /// Returns `None` when every vocabulary token is excluded.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, exclude: &HashSet<&str>) -> Option<&str> {
        let mut excluded: Vec<usize> = exclude.iter().filter_map(|t| self.index_of(t)).collect();
        excluded.sort_unstable();
        let excluded_weight: u64 = excluded.iter().map(|&i| self.counts[i]).sum();
        let allowed = self.total() - excluded_weight;
        if allowed == 0 {
            return None;
        }
        // Map a ticket over the allowed mass onto the full cumulative array by
        // stepping over excluded entries in order.
        let mut ticket = rng.gen_range(0..allowed);
        for &i in &excluded {
            let start = self.cumulative[i] - self.counts[i];
            if ticket >= start {
                ticket += self.counts[i];
            } else {
                break;
            }
        }
        Some(&self.tokens[self.pick(ticket)])
    }
}

/// Counts the target-side tokens of a corpus.
pub fn build_vocab<'a, I>(corpus: I) -> Result<Vocab>
where
    I: IntoIterator<Item = &'a BitextRecord>,
{
    let mut any = false;
    let vocab = Vocab::from_sequences(corpus.into_iter().map(|r| {
        any = true;
        &r.target
    }));
    if !any {
        return Err(Error::Invalid("cannot build a vocabulary from an empty corpus".into()));
    }
    vocab
}

/// Corrupts `tokens`.
///
/// Each token is independently masked with probability `rates.mask`; tokens
/// that are not masked are replaced with probability `rates.replace` by a
/// vocabulary token that does not occur in the sentence. After every input
/// position a mask is inserted with probability `insert_rate`.
pub fn apply_noise<R: Rng + ?Sized>(
    tokens: &TokenSeq,
    rates: SampledRates,
    insert_rate: f64,
    vocab: &Vocab,
    rng: &mut R,
) -> NoisedSeq {
    let present: HashSet<&str> = tokens.iter().map(String::as_str).collect();
    let mut slots = Vec::with_capacity(tokens.len() + tokens.len() / 4);
    for tok in tokens.iter() {
        let slot = if rng.gen::<f64>() < rates.mask {
            Slot::Masked { original: tok.clone() }
        } else if rng.gen::<f64>() < rates.replace {
            match vocab.sample_excluding(rng, &present) {
                Some(rep) => Slot::Replaced {
                    original: tok.clone(),
                    replacement: rep.to_owned(),
                },
                None => Slot::Kept(tok.clone()),
            }
        } else {
            Slot::Kept(tok.clone())
        };
        slots.push(slot);
        if rng.gen::<f64>() < insert_rate {
            slots.push(Slot::InsertedMask);
        }
    }
    NoisedSeq { slots }
}
