//! Reconstruction of noised sentences into fluent hallucinated targets.
//!
//! The generator is a contract ([`Infiller`]); the toolkit ships an exact
//! de-noiser used as a test oracle, a vocabulary sampler for desk-scale runs,
//! and a client for an external generation service.

use std::sync::Arc;

use crate::corpus::{TokenSeq, MASK_TOKEN};
use crate::error::{Error, Result};
use crate::noising::{NoisedSeq, Slot, Vocab};
use crate::remote::RemoteClient;
use crate::rng::RecordRng;

pub const DEFAULT_BEAM_SIZE: u32 = 4;
pub const DEFAULT_LENGTH_PENALTY: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InfillRequest {
    pub noised: NoisedSeq,
    pub beam_size: u32,
    pub length_penalty: f64,
}

impl InfillRequest {
    pub fn new(noised: NoisedSeq) -> Self {
        InfillRequest {
            noised,
            beam_size: DEFAULT_BEAM_SIZE,
            length_penalty: DEFAULT_LENGTH_PENALTY,
        }
    }

    pub fn with_decoding(mut self, beam_size: u32, length_penalty: f64) -> Result<Self> {
        if beam_size == 0 {
            return Err(Error::Invalid("beam size must be at least 1".into()));
        }
        self.beam_size = beam_size;
        self.length_penalty = length_penalty;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfillResult {
    pub filled: TokenSeq,
}

impl InfillResult {
    fn new(filled: TokenSeq) -> Result<Self> {
        if filled.is_empty() {
            return Err(Error::Invariant("infiller produced an empty sequence".into()));
        }
        Ok(InfillResult { filled })
    }
}

/// Turns a noised sentence into a complete one. Implementations must be
/// callable from several worker threads at once.
pub trait Infiller: Send + Sync {
    fn infill(&self, req: &InfillRequest, rng: &mut RecordRng) -> Result<InfillResult>;
}

impl<T: Infiller + ?Sized> Infiller for Arc<T> {
    fn infill(&self, req: &InfillRequest, rng: &mut RecordRng) -> Result<InfillResult> {
        (**self).infill(req, rng)
    }
}

impl<T: Infiller + ?Sized> Infiller for Box<T> {
    fn infill(&self, req: &InfillRequest, rng: &mut RecordRng) -> Result<InfillResult> {
        (**self).infill(req, rng)
    }
}

/// Restores masked tokens, drops inserted masks and keeps replacements, so
/// the output differs from the original exactly at the replaced positions.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityInfiller;

impl Infiller for IdentityInfiller {
    fn infill(&self, req: &InfillRequest, _rng: &mut RecordRng) -> Result<InfillResult> {
        let mut out = Vec::with_capacity(req.noised.len());
        for (i, slot) in req.noised.slots().iter().enumerate() {
            match slot {
                Slot::Kept(t) | Slot::Masked { original: t } => out.push(t.clone()),
                Slot::Replaced { replacement, .. } => out.push(replacement.clone()),
                Slot::InsertedMask => {}
                Slot::Unattributed(_) => return Err(Error::MissingOrigin(i)),
            }
        }
        InfillResult::new(TokenSeq::new(out)?)
    }
}

/// Fills every mask, inserted ones included, with a single token drawn from
/// the vocabulary's unigram distribution.
#[derive(Debug, Clone)]
pub struct StochasticInfiller {
    vocab: Arc<Vocab>,
    sentinel: String,
}

impl StochasticInfiller {
    pub fn new(vocab: Arc<Vocab>) -> Self {
        StochasticInfiller {
            vocab,
            sentinel: MASK_TOKEN.to_owned(),
        }
    }

    pub fn with_sentinel(mut self, sentinel: impl Into<String>) -> Self {
        self.sentinel = sentinel.into();
        self
    }
}

impl Infiller for StochasticInfiller {
    fn infill(&self, req: &InfillRequest, rng: &mut RecordRng) -> Result<InfillResult> {
        let out: Vec<String> = req
            .noised
            .slots()
            .iter()
            .map(|slot| {
                if slot.is_mask(&self.sentinel) {
                    self.vocab.sample(rng).to_owned()
                } else {
                    slot.surface(&self.sentinel).to_owned()
                }
            })
            .collect();
        InfillResult::new(TokenSeq::new(out)?)
    }
}

/// Delegates infilling to the generation service's `/infill` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteInfiller {
    client: Arc<RemoteClient>,
}

impl RemoteInfiller {
    pub fn new(client: Arc<RemoteClient>) -> Self {
        RemoteInfiller { client }
    }
}

impl Infiller for RemoteInfiller {
    fn infill(&self, req: &InfillRequest, _rng: &mut RecordRng) -> Result<InfillResult> {
        let tokens = req.noised.render(self.client.sentinel());
        let filled = self.client.infill(&tokens, req.beam_size, req.length_penalty)?;
        let filled = TokenSeq::new(filled).map_err(|e| Error::Protocol {
            endpoint: self.client.endpoint().to_owned(),
            message: e.to_string(),
        })?;
        if filled.is_empty() {
            return Err(Error::Protocol {
                endpoint: self.client.endpoint().to_owned(),
                message: "empty token list".into(),
            });
        }
        Ok(InfillResult { filled })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noising::{apply_noise, Origin, SampledRates};
    use crate::rng::{record_rng, Stream};

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s).unwrap()
    }

    #[test]
    fn identity_restores_clean_input() {
        let t = seq("the cat sat");
        let req = InfillRequest::new(NoisedSeq::clean(&t));
        let out = IdentityInfiller
            .infill(&req, &mut record_rng(0, 0, Stream::Infill))
            .unwrap();
        assert_eq!(out.filled, t);
    }

    #[test]
    fn identity_keeps_only_replacements() {
        let noised = NoisedSeq::from_slots(vec![
            Slot::Kept("a".into()),
            Slot::InsertedMask,
            Slot::Replaced {
                original: "b".into(),
                replacement: "x".into(),
            },
            Slot::Masked { original: "c".into() },
        ]);
        let out = IdentityInfiller
            .infill(&InfillRequest::new(noised), &mut record_rng(0, 0, Stream::Infill))
            .unwrap();
        assert_eq!(out.filled.tokens(), ["a", "x", "c"]);
    }

    #[test]
    fn identity_needs_provenance() {
        let req = InfillRequest::new(NoisedSeq::from_rendered(["a", MASK_TOKEN]));
        let err = IdentityInfiller.infill(&req, &mut record_rng(0, 0, Stream::Infill));
        assert!(matches!(err, Err(Error::MissingOrigin(0))));
    }

    #[test]
    fn identity_inverts_mask_only_noise() {
        let t = seq("one two three four five six seven");
        let vocab = Vocab::from_sequences([&t]).unwrap();
        for seed in 0..50 {
            let mut rng = record_rng(seed, 0, Stream::Noise);
            let noised = apply_noise(
                &t,
                SampledRates {
                    mask: 0.5,
                    replace: 0.0,
                },
                0.0,
                &vocab,
                &mut rng,
            );
            let out = IdentityInfiller.infill(&InfillRequest::new(noised), &mut rng).unwrap();
            assert_eq!(out.filled, t);
        }
    }

    #[test]
    fn stochastic_fills_every_mask() {
        let t = seq("a b c d e f g h");
        let vocab = Arc::new(Vocab::from_sequences([&seq("p q r")]).unwrap());
        let inf = StochasticInfiller::new(vocab.clone());
        for seed in 0..50 {
            let mut rng = record_rng(seed, 0, Stream::Noise);
            let noised = apply_noise(
                &t,
                SampledRates {
                    mask: 0.5,
                    replace: 0.2,
                },
                0.3,
                &vocab,
                &mut rng,
            );
            let inserted = noised.count(Origin::InsertedMask);
            let req = InfillRequest::new(noised);
            let a = inf.infill(&req, &mut record_rng(seed, 0, Stream::Infill)).unwrap();
            let b = inf.infill(&req, &mut record_rng(seed, 0, Stream::Infill)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.filled.len(), t.len() + inserted);
            assert!(a.filled.iter().all(|tok| tok != MASK_TOKEN));
        }
    }

    #[test]
    fn stochastic_passes_through_without_masks() {
        let t = seq("a b");
        let vocab = Arc::new(Vocab::from_sequences([&seq("z")]).unwrap());
        let out = StochasticInfiller::new(vocab)
            .infill(
                &InfillRequest::new(NoisedSeq::clean(&t)),
                &mut record_rng(1, 1, Stream::Infill),
            )
            .unwrap();
        assert_eq!(out.filled, t);
    }

    #[test]
    fn decoding_defaults() {
        let req = InfillRequest::new(NoisedSeq::default());
        assert_eq!(req.beam_size, 4);
        assert_eq!(req.length_penalty, 3.0);
        assert!(req.with_decoding(0, 1.0).is_err());
    }
}
