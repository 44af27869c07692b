use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    assign_labels, make_mlm_example, make_training_example, MlmExample, Segment, TrainConfig, TrainingExample,
};
use crate::corpus::{BitextRecord, Label, LabeledSeq};
use crate::error::{Error, Result};
use crate::infill::{InfillRequest, Infiller, DEFAULT_BEAM_SIZE, DEFAULT_LENGTH_PENALTY};
use crate::noising::{apply_noise, sample_rates, NoiseConfig, NoisedSeq, Origin, SampledRates, Vocab};
use crate::rng::{record_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSettings {
    pub noise: NoiseConfig,
    pub train: TrainConfig,
    /// Hallucinate the paraphrase instead of the target.
    pub use_paraphrase: bool,
    pub beam_size: u32,
    pub length_penalty: f64,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        SynthesisSettings {
            noise: NoiseConfig::default(),
            train: TrainConfig::default(),
            use_paraphrase: false,
            beam_size: DEFAULT_BEAM_SIZE,
            length_penalty: DEFAULT_LENGTH_PENALTY,
        }
    }
}

/// Everything produced for one bitext record.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecord {
    pub record_id: u64,
    pub rates: SampledRates,
    pub noised: NoisedSeq,
    /// The hallucinated sequence with labels computed against its base.
    pub target_prime: LabeledSeq,
    pub example: TrainingExample,
    pub mlm: MlmExample,
}

impl SyntheticRecord {
    pub fn label_density(&self) -> f64 {
        self.target_prime.hallucinated_count() as f64 / self.target_prime.len() as f64
    }

    pub fn training_line(&self) -> TrainingLine {
        TrainingLine {
            record_id: self.record_id,
            source: self.example.segment_tokens(Segment::Source).join(" "),
            reference: self.example.segment_tokens(Segment::Reference).join(" "),
            target_prime: self.example.segment_tokens(Segment::Target).join(" "),
            labels: self.example.labels().to_vec(),
        }
    }

    pub fn mlm_line(&self) -> MlmLine {
        MlmLine {
            record_id: self.record_id,
            masked_pieces: self.mlm.masked_pieces.clone(),
            mask_positions: self.mlm.mask_positions.clone(),
            originals: self.mlm.originals.clone(),
        }
    }
}

/// Record-per-line form of a training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingLine {
    pub record_id: u64,
    pub source: String,
    pub reference: String,
    pub target_prime: String,
    pub labels: Vec<Label>,
}

/// Record-per-line form of a masked-LM companion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlmLine {
    pub record_id: u64,
    pub masked_pieces: Vec<String>,
    pub mask_positions: Vec<usize>,
    pub originals: Vec<String>,
}

/// Noise, infill, label and assemble one record.
///
/// The base sequence is the target, or the paraphrase in paraphrase mode;
/// labels are always computed against the base. The training example pairs
/// the source and the (dropped-out) true target with the hallucinated base.
pub fn synthesize_record(
    record: &BitextRecord,
    settings: &SynthesisSettings,
    vocab: &Vocab,
    infiller: &dyn Infiller,
) -> Result<SyntheticRecord> {
    let id = record.record_id;
    let base = if settings.use_paraphrase {
        record.paraphrase.as_ref().ok_or_else(|| Error::Record {
            record_id: id,
            message: "paraphrase mode requires a paraphrase".into(),
        })?
    } else {
        &record.target
    };

    let mut noise_rng = record_rng(settings.noise.seed, id, Stream::Noise);
    let rates = sample_rates(&settings.noise, &mut noise_rng);
    let noised = apply_noise(base, rates, settings.noise.insert_rate, vocab, &mut noise_rng);
    if noised.non_inserted_len() != base.len() {
        return Err(Error::Invariant(format!(
            "record {id}: noising changed the sentence length"
        )));
    }

    let req = InfillRequest::new(noised).with_decoding(settings.beam_size, settings.length_penalty)?;
    let filled = infiller
        .infill(&req, &mut record_rng(settings.noise.seed, id, Stream::Infill))?
        .filled;
    let target_prime = assign_labels(&filled, base)?;

    let example = make_training_example(
        &record.source,
        &record.target,
        &target_prime,
        &settings.train,
        &mut record_rng(settings.train.seed, id, Stream::Dropout),
    );
    let mlm = make_mlm_example(
        &record.source,
        &record.target,
        &settings.train,
        &mut record_rng(settings.train.seed, id, Stream::Mlm),
    );
    Ok(SyntheticRecord {
        record_id: id,
        rates,
        noised: req.noised,
        target_prime,
        example,
        mlm,
    })
}

/// Synthesizes every record on a pool of `workers` threads. Output order
/// follows input order and does not depend on the worker count.
pub fn build_synthetic_dataset(
    records: &[BitextRecord],
    settings: &SynthesisSettings,
    vocab: &Vocab,
    infiller: &dyn Infiller,
    workers: usize,
) -> Result<Vec<SyntheticRecord>> {
    settings.noise.validate()?;
    settings.train.validate()?;
    if settings.use_paraphrase {
        if let Some(r) = records.iter().find(|r| r.paraphrase.is_none()) {
            return Err(Error::Record {
                record_id: r.record_id,
                message: "paraphrase mode requires a paraphrase".into(),
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invariant(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<SyntheticRecord>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| synthesize_record(r, settings, vocab, infiller))
            .collect()
    });
    results.into_iter().collect()
}

/// Aggregate statistics over a synthesized corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisStats {
    pub records: usize,
    pub mean_label_density: f64,
    pub mean_mask_rate: f64,
    pub mean_replace_rate: f64,
    pub masked_fraction: f64,
    pub replaced_fraction: f64,
    pub inserted_per_token: f64,
}

impl SynthesisStats {
    pub fn from_records(records: &[SyntheticRecord]) -> Self {
        if records.is_empty() {
            return SynthesisStats::default();
        }
        let n = records.len() as f64;
        let mut base_tokens = 0usize;
        let (mut masked, mut replaced, mut inserted) = (0usize, 0usize, 0usize);
        let (mut density, mut pm, mut pr) = (0.0, 0.0, 0.0);
        for r in records {
            density += r.label_density();
            pm += r.rates.mask;
            pr += r.rates.replace;
            base_tokens += r.noised.non_inserted_len();
            masked += r.noised.count(Origin::Masked);
            replaced += r.noised.count(Origin::Replaced);
            inserted += r.noised.count(Origin::InsertedMask);
        }
        let bt = base_tokens as f64;
        SynthesisStats {
            records: records.len(),
            mean_label_density: density / n,
            mean_mask_rate: pm / n,
            mean_replace_rate: pr / n,
            masked_fraction: masked as f64 / bt,
            replaced_fraction: replaced as f64 / bt,
            inserted_per_token: inserted as f64 / bt,
        }
    }
}
