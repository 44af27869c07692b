//! Subcommand implementations behind the `halluc` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    load_annotation_file, load_bitext, load_eval_records, majority_vote, write_annotation_file, AnnotationRecord,
    BitextFormat, EvalRecord, LabeledSeq, SentenceRating, MASK_TOKEN,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_records, fleiss_kappa, EvalReport, RatingMatrix};
use crate::infill::{IdentityInfiller, Infiller, RemoteInfiller, StochasticInfiller};
use crate::labeling::{build_synthetic_dataset, SynthesisSettings, SynthesisStats, SyntheticRecord, TrainConfig};
use crate::noising::{build_vocab, NoiseConfig};
use crate::remote::RemoteClient;

/// Environment variable consulted when no endpoint is given.
pub const ENDPOINT_ENV: &str = "HALLUC_ENDPOINT";

pub const TRAIN_FILE: &str = "train.jsonl";
pub const MLM_FILE: &str = "mlm.jsonl";
pub const NOISED_FILE: &str = "noised.tsv";

/// Which recipe supplies the default hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Machine translation.
    Mt,
    /// Abstractive summarization.
    Summarization,
}

/// Hyperparameters of a task recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskPreset {
    pub mask_upper: f64,
    pub replace_upper: f64,
    pub insert_rate: f64,
    pub dropout_rate: f64,
    pub mlm_mask_prob: f64,
    pub alpha: f64,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Mt => "mt",
            Task::Summarization => "summarization",
        })
    }
}

impl Task {
    pub fn preset(self) -> TaskPreset {
        match self {
            Task::Mt => TaskPreset {
                mask_upper: 0.6,
                replace_upper: 0.3,
                insert_rate: 0.2,
                dropout_rate: 0.3,
                mlm_mask_prob: 0.3,
                alpha: 0.6,
            },
            Task::Summarization => TaskPreset {
                mask_upper: 0.4,
                replace_upper: 0.2,
                insert_rate: 0.2,
                dropout_rate: 0.5,
                mlm_mask_prob: 0.3,
                alpha: 0.5,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfillerChoice {
    Identity,
    Stochastic,
    Remote { endpoint: String },
}

/// Fully resolved settings for `synthesize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub task: Task,
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub settings: SynthesisSettings,
    pub infiller: InfillerChoice,
    pub mask_token: String,
    pub workers: usize,
    pub max_in_flight: usize,
}

impl PipelineConfig {
    /// Task defaults with every noise and training seed set to `seed`.
    pub fn for_task(task: Task, seed: u64, input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let p = task.preset();
        PipelineConfig {
            task,
            input: input.into(),
            output_dir: output_dir.into(),
            settings: SynthesisSettings {
                noise: NoiseConfig {
                    mask_upper: p.mask_upper,
                    replace_upper: p.replace_upper,
                    insert_rate: p.insert_rate,
                    seed,
                },
                train: TrainConfig {
                    dropout_rate: p.dropout_rate,
                    mlm_mask_prob: p.mlm_mask_prob,
                    alpha: p.alpha,
                    mask_source: true,
                    seed,
                },
                ..SynthesisSettings::default()
            },
            infiller: InfillerChoice::Stochastic,
            mask_token: MASK_TOKEN.to_owned(),
            workers: default_workers(),
            max_in_flight: crate::remote::DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

/// What `synthesize` reports back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub task: Task,
    pub mask_upper: f64,
    pub replace_upper: f64,
    pub insert_rate: f64,
    pub dropout_rate: f64,
    pub mlm_mask_prob: f64,
    pub alpha: f64,
    #[serde(flatten)]
    pub stats: SynthesisStats,
    pub files: Vec<PathBuf>,
}

impl std::fmt::Display for SynthesisSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "task: {}", self.task)?;
        writeln!(f, "h_m: {}", self.mask_upper)?;
        writeln!(f, "h_r: {}", self.replace_upper)?;
        writeln!(f, "p_ins: {}", self.insert_rate)?;
        writeln!(f, "dropout: {}", self.dropout_rate)?;
        writeln!(f, "mlm_prob: {}", self.mlm_mask_prob)?;
        writeln!(f, "alpha: {}", self.alpha)?;
        writeln!(f, "records: {}", self.stats.records)?;
        writeln!(f, "mean_label_density: {:.6}", self.stats.mean_label_density)?;
        writeln!(f, "mean_p_m: {:.6}", self.stats.mean_mask_rate)?;
        writeln!(f, "mean_p_r: {:.6}", self.stats.mean_replace_rate)?;
        writeln!(f, "masked_fraction: {:.6}", self.stats.masked_fraction)?;
        writeln!(f, "replaced_fraction: {:.6}", self.stats.replaced_fraction)?;
        write!(f, "inserted_per_token: {:.6}", self.stats.inserted_per_token)
    }
}

struct LineWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl LineWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(LineWriter {
            inner: BufWriter::new(file),
            path,
        })
    }

    fn line(&mut self, text: &str) -> Result<()> {
        self.inner
            .write_all(text.as_bytes())
            .and_then(|_| self.inner.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let text = serde_json::to_string(value).map_err(|e| Error::Invariant(e.to_string()))?;
        self.line(&text)
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn write_dataset(
    dir: &Path,
    records: &[SyntheticRecord],
    bitext: &[crate::corpus::BitextRecord],
    mask_token: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut train = LineWriter::create(dir.join(TRAIN_FILE))?;
    let mut mlm = LineWriter::create(dir.join(MLM_FILE))?;
    let mut noised = LineWriter::create(dir.join(NOISED_FILE))?;
    for (rec, src) in records.iter().zip(bitext) {
        train.json(&rec.training_line())?;
        mlm.json(&rec.mlm_line())?;
        noised.line(&format!(
            "{}\t{}\t{}",
            src.source.to_text(),
            src.target.to_text(),
            rec.noised.render(mask_token).join(" ")
        ))?;
    }
    Ok(vec![train.finish()?, mlm.finish()?, noised.finish()?])
}

/// Reads bitext, builds the synthetic dataset and writes the training,
/// masked-LM and noised-corpus files into the output directory.
pub fn cmd_synthesize(cfg: &PipelineConfig) -> Result<SynthesisSummary> {
    let bitext = load_bitext(&cfg.input, BitextFormat::from_path(&cfg.input))?;
    if bitext.is_empty() {
        return Err(Error::Invalid(format!("{} holds no records", cfg.input.display())));
    }
    let vocab = Arc::new(build_vocab(&bitext)?);
    let infiller: Box<dyn Infiller> = match &cfg.infiller {
        InfillerChoice::Identity => Box::new(IdentityInfiller),
        InfillerChoice::Stochastic => {
            Box::new(StochasticInfiller::new(vocab.clone()).with_sentinel(cfg.mask_token.clone()))
        }
        InfillerChoice::Remote { endpoint } => {
            let client =
                RemoteClient::with_options(endpoint.clone(), cfg.max_in_flight, crate::remote::DEFAULT_TIMEOUT)
                    .with_sentinel(cfg.mask_token.clone());
            if !client.health()? {
                return Err(Error::Transport {
                    endpoint: endpoint.clone(),
                    message: "service reports not ready".into(),
                });
            }
            Box::new(RemoteInfiller::new(Arc::new(client)))
        }
    };
    let records = build_synthetic_dataset(&bitext, &cfg.settings, &vocab, infiller.as_ref(), cfg.workers)?;
    let files = write_dataset(&cfg.output_dir, &records, &bitext, &cfg.mask_token)?;
    let s = &cfg.settings;
    Ok(SynthesisSummary {
        task: cfg.task,
        mask_upper: s.noise.mask_upper,
        replace_upper: s.noise.replace_upper,
        insert_rate: s.noise.insert_rate,
        dropout_rate: s.train.dropout_rate,
        mlm_mask_prob: s.train.mlm_mask_prob,
        alpha: s.train.alpha,
        stats: SynthesisStats::from_records(&records),
        files,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Evaluates predictions against gold annotations. Without a prediction
/// file the gold file must carry the predictions itself.
pub fn cmd_evaluate(gold: &Path, pred: Option<&Path>, report_path: Option<&Path>) -> Result<EvalReport> {
    let gold_records = load_eval_records(gold)?;
    let report = match pred {
        Some(p) => evaluate(&gold_records, &load_eval_records(p)?)?,
        None => evaluate_records(&gold_records)?,
    };
    if let Some(path) = report_path {
        write_json(path, &report)?;
    }
    Ok(report)
}

/// Agreement between annotators and the consolidated benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotators: usize,
    pub sentences: usize,
    pub kept_sentences: usize,
    pub dropped_incomprehensible: usize,
    pub tokens: usize,
    pub token_kappa: Option<f64>,
    pub sentence_kappa: Option<f64>,
    /// `ratings` when sentence categories come from rating files, otherwise
    /// `derived` (hallucinated iff any token is labeled 1).
    pub sentence_categories: String,
    pub notes: Vec<String>,
}

/// Core of `agreement`: `annotators[k][s]` is annotator `k`'s labels of
/// sentence `s`; `ratings[k][s]` the optional sentence judgements.
pub fn annotation_agreement(
    annotators: &[Vec<LabeledSeq>],
    ratings: Option<&[Vec<SentenceRating>]>,
) -> Result<(AgreementReport, Vec<LabeledSeq>)> {
    if annotators.len() < 2 {
        return Err(Error::Invalid("agreement needs at least two annotators".into()));
    }
    let sentences = annotators[0].len();
    for (k, a) in annotators.iter().enumerate() {
        if a.len() != sentences {
            return Err(Error::Invalid(format!(
                "annotator {k} has {} sentences, annotator 0 has {sentences}",
                a.len()
            )));
        }
    }
    if let Some(r) = ratings {
        if r.len() != annotators.len() || r.iter().any(|x| x.len() != sentences) {
            return Err(Error::Invalid("ratings must cover every annotator and sentence".into()));
        }
    }
    let mut records = Vec::with_capacity(sentences);
    for s in 0..sentences {
        let labels: Vec<LabeledSeq> = annotators.iter().map(|a| a[s].clone()).collect();
        let sr = ratings.map(|r| r.iter().map(|x| x[s]).collect());
        let rec =
            AnnotationRecord::new(None, labels, sr).map_err(|e| Error::Invalid(format!("sentence {}: {e}", s + 1)))?;
        records.push(rec);
    }

    let mut notes = Vec::new();
    let kappa = |m: Result<RatingMatrix>, what: &str, notes: &mut Vec<String>| match m.and_then(|m| fleiss_kappa(&m)) {
        Ok(k) => Some(k),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    };

    let (sentence_assign, categories, source): (Vec<Vec<usize>>, usize, &str) = match ratings {
        Some(r) => (
            r.iter().map(|x| x.iter().map(|v| v.index()).collect()).collect(),
            SentenceRating::ALL.len(),
            "ratings",
        ),
        None => (
            annotators
                .iter()
                .map(|a| a.iter().map(|s| usize::from(s.hallucinated_count() > 0)).collect())
                .collect(),
            2,
            "derived",
        ),
    };
    let sentence_kappa = kappa(
        RatingMatrix::from_assignments(&sentence_assign, categories),
        "sentence_kappa",
        &mut notes,
    );

    let kept: Vec<&AnnotationRecord> = records.iter().filter(|r| !r.is_incomprehensible()).collect();
    let token_assign: Vec<Vec<usize>> = (0..annotators.len())
        .map(|k| {
            kept.iter()
                .flat_map(|r| r.annotations()[k].labels().iter().map(|&l| l as usize))
                .collect()
        })
        .collect();
    let tokens = token_assign[0].len();
    let token_kappa = kappa(
        RatingMatrix::from_assignments(&token_assign, 2),
        "token_kappa",
        &mut notes,
    );

    let majority: Vec<LabeledSeq> = kept
        .iter()
        .map(|r| {
            let lists: Vec<&[u8]> = r.annotations().iter().map(|a| a.labels()).collect();
            LabeledSeq::new(r.output().clone(), majority_vote(&lists)?)
        })
        .collect::<Result<_>>()?;

    Ok((
        AgreementReport {
            annotators: annotators.len(),
            sentences,
            kept_sentences: kept.len(),
            dropped_incomprehensible: sentences - kept.len(),
            tokens,
            token_kappa,
            sentence_kappa,
            sentence_categories: source.to_owned(),
            notes,
        },
        majority,
    ))
}

fn load_ratings(path: &Path) -> Result<Vec<SentenceRating>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, l)| {
            l.parse().map_err(|e: Error| Error::Input {
                path: path.display().to_string(),
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads one annotation file per annotator (and optionally one rating file
/// per annotator), writes the majority-voted benchmark and reports kappa.
pub fn cmd_agreement(
    annotation_paths: &[PathBuf],
    rating_paths: Option<&[PathBuf]>,
    majority_out: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<AgreementReport> {
    let annotators: Vec<Vec<LabeledSeq>> = annotation_paths
        .iter()
        .map(load_annotation_file)
        .collect::<Result<_>>()?;
    let ratings: Option<Vec<Vec<SentenceRating>>> = rating_paths
        .map(|ps| ps.iter().map(|p| load_ratings(p)).collect::<Result<_>>())
        .transpose()?;
    let (report, majority) = annotation_agreement(&annotators, ratings.as_deref())?;
    if let Some(path) = majority_out {
        write_annotation_file(path, &majority)?;
    }
    if let Some(path) = report_path {
        write_json(path, &report)?;
    }
    Ok(report)
}

/// Fills `pred_probs` of every record by asking the service's `/predict`.
pub fn cmd_predict(input: &Path, output: &Path, client: &RemoteClient, workers: usize) -> Result<usize> {
    let records = load_eval_records(input)?;
    if !client.health()? {
        return Err(Error::Transport {
            endpoint: client.endpoint().to_owned(),
            message: "service reports not ready".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invariant(e.to_string()))?;
    let filled: Vec<Result<EvalRecord>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| {
                let probs = client.predict(&r.source.to_text(), &r.output.to_text(), None)?;
                let mut r = r.clone();
                r.pred_probs = Some(probs);
                Ok(r)
            })
            .collect()
    });
    let mut w = LineWriter::create(output.to_path_buf())?;
    let mut n = 0;
    for r in filled {
        w.json(&r?)?;
        n += 1;
    }
    w.finish()?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_annotation_line;

    #[test]
    fn presets_match_recipes() {
        let mt = Task::Mt.preset();
        assert_eq!((mt.mask_upper, mt.replace_upper), (0.6, 0.3));
        assert_eq!((mt.dropout_rate, mt.alpha, mt.mlm_mask_prob), (0.3, 0.6, 0.3));
        let su = Task::Summarization.preset();
        assert_eq!((su.mask_upper, su.replace_upper), (0.4, 0.2));
        assert_eq!((su.dropout_rate, su.alpha), (0.5, 0.5));
        assert_eq!(su.insert_rate, 0.2);
    }

    fn ann(lines: &[&str]) -> Vec<LabeledSeq> {
        lines.iter().map(|l| parse_annotation_line(l).unwrap()).collect()
    }

    #[test]
    fn identical_annotators_agree_perfectly() {
        let a = ann(&["a[0] b[1] c[0]", "d[1] e[0]"]);
        let (r, maj) = annotation_agreement(&[a.clone(), a.clone(), a.clone()], None).unwrap();
        assert!((r.token_kappa.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(maj, a);
        assert_eq!(r.tokens, 5);
        // Both sentences contain a 1, so derived sentence categories collapse.
        assert!(r.sentence_kappa.is_none());
    }

    #[test]
    fn perfect_disagreement_two_annotators() {
        // Balanced binary labels, always opposite: P̄ = 0, P̄e = 1/2, κ = -1.
        let a = ann(&["a[0] b[1]", "c[1] d[0]"]);
        let b = ann(&["a[1] b[0]", "c[0] d[1]"]);
        let (r, maj) = annotation_agreement(&[a, b], None).unwrap();
        assert!((r.token_kappa.unwrap() + 1.0).abs() < 1e-12);
        assert!(maj.iter().all(|s| s.hallucinated_count() == 0));
    }

    #[test]
    fn misaligned_tokens_are_rejected() {
        let a = ann(&["a[0] b[1]"]);
        let b = ann(&["a[0] c[1]"]);
        assert!(annotation_agreement(&[a.clone(), b], None).is_err());
        assert!(annotation_agreement(std::slice::from_ref(&a), None).is_err());
        let c = ann(&["a[0] b[1]", "x[0]"]);
        assert!(annotation_agreement(&[a, c], None).is_err());
    }

    #[test]
    fn incomprehensible_sentences_are_dropped() {
        use SentenceRating::*;
        let a = ann(&["a[0] b[1]", "c[1] d[1]", "e[0]"]);
        let ratings = vec![
            vec![Hallucinated, Incomprehensible, Faithful],
            vec![Hallucinated, Incomprehensible, Faithful],
            vec![Faithful, Hallucinated, Faithful],
        ];
        let (r, maj) = annotation_agreement(&[a.clone(), a.clone(), a], Some(&ratings)).unwrap();
        assert_eq!(r.dropped_incomprehensible, 1);
        assert_eq!(r.kept_sentences, 2);
        assert_eq!(r.tokens, 3);
        assert_eq!(maj.len(), 2);
        assert_eq!(r.sentence_categories, "ratings");
        assert!(r.sentence_kappa.is_some());
    }
}
