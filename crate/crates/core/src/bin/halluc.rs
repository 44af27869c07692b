use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use halluc_core::corpus::{serialize_annotation_line, TokenSeq};
use halluc_core::labeling::assign_labels;
use halluc_core::pipeline::{
    cmd_agreement, cmd_evaluate, cmd_predict, cmd_synthesize, default_workers, InfillerChoice, PipelineConfig, Task,
    ENDPOINT_ENV,
};
use halluc_core::remote::{RemoteClient, DEFAULT_MAX_IN_FLIGHT, DEFAULT_TIMEOUT};
use halluc_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "halluc",
    version,
    about = "Token-level hallucination data and evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build synthetic hallucination training data from bitext.
    Synthesize(SynthesizeArgs),
    /// Score predictions against gold token labels.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        /// Prediction records keyed by `id`; omit when the gold file carries predictions.
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Inter-annotator agreement and majority-voted benchmark.
    Agreement {
        /// One annotation file per annotator.
        #[arg(required = true, num_args = 2..)]
        annotations: Vec<PathBuf>,
        /// One sentence-rating file per annotator, same order.
        #[arg(long, num_args = 1..)]
        ratings: Option<Vec<PathBuf>>,
        #[arg(long)]
        majority_out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fill `pred_probs` of evaluation records from the prediction service.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: String,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_IN_FLIGHT)]
        max_in_flight: usize,
    },
    /// Label a hallucinated sentence against its base sentence.
    Label {
        #[arg(long)]
        hallucinated: String,
        #[arg(long)]
        base: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InfillerKind {
    Identity,
    Stochastic,
    Remote,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Bitext: `.tsv` or `.jsonl`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "mt")]
    task: Task,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Upper bound of the per-sentence mask fraction.
    #[arg(long)]
    hm: Option<f64>,
    /// Upper bound of the per-sentence replacement probability.
    #[arg(long)]
    hr: Option<f64>,
    #[arg(long)]
    p_ins: Option<f64>,
    /// Reference-token dropout rate.
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    mlm_prob: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Only mask target tokens in the masked-LM companion.
    #[arg(long)]
    mlm_target_only: bool,
    #[arg(long, value_enum, default_value = "stochastic")]
    infiller: InfillerKind,
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_IN_FLIGHT)]
    max_in_flight: usize,
    #[arg(long)]
    use_paraphrase: bool,
    #[arg(long, default_value = halluc_core::corpus::MASK_TOKEN)]
    mask_token: String,
    #[arg(long, default_value_t = 4)]
    beam_size: u32,
    #[arg(long, default_value_t = 3.0)]
    length_penalty: f64,
}

impl SynthesizeArgs {
    fn into_config(self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::for_task(self.task, self.seed, self.input, self.out_dir);
        let s = &mut cfg.settings;
        if let Some(v) = self.hm {
            s.noise.mask_upper = v;
        }
        if let Some(v) = self.hr {
            s.noise.replace_upper = v;
        }
        if let Some(v) = self.p_ins {
            s.noise.insert_rate = v;
        }
        if let Some(v) = self.dropout {
            s.train.dropout_rate = v;
        }
        if let Some(v) = self.mlm_prob {
            s.train.mlm_mask_prob = v;
        }
        if let Some(v) = self.alpha {
            s.train.alpha = v;
        }
        s.train.mask_source = !self.mlm_target_only;
        s.use_paraphrase = self.use_paraphrase;
        s.beam_size = self.beam_size;
        s.length_penalty = self.length_penalty;
        cfg.infiller = match self.infiller {
            InfillerKind::Identity => InfillerChoice::Identity,
            InfillerKind::Stochastic => InfillerChoice::Stochastic,
            InfillerKind::Remote => InfillerChoice::Remote {
                endpoint: self
                    .endpoint
                    .ok_or_else(|| Error::Invalid(format!("--infiller remote needs --endpoint or {ENDPOINT_ENV}")))?,
            },
        };
        cfg.mask_token = self.mask_token;
        cfg.workers = self.workers.unwrap_or_else(default_workers);
        cfg.max_in_flight = self.max_in_flight;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synthesize(args) => {
            let cfg = args.into_config()?;
            let summary = cmd_synthesize(&cfg)?;
            println!("{summary}");
        }
        Command::Evaluate { gold, pred, report } => {
            let r = cmd_evaluate(&gold, pred.as_deref(), report.as_deref())?;
            print_json(&r)?;
        }
        Command::Agreement {
            annotations,
            ratings,
            majority_out,
            report,
        } => {
            let r = cmd_agreement(
                &annotations,
                ratings.as_deref(),
                majority_out.as_deref(),
                report.as_deref(),
            )?;
            print_json(&r)?;
        }
        Command::Predict {
            input,
            output,
            endpoint,
            workers,
            max_in_flight,
        } => {
            let client = RemoteClient::with_options(endpoint, max_in_flight, DEFAULT_TIMEOUT);
            let n = cmd_predict(&input, &output, &client, workers.unwrap_or_else(default_workers))?;
            println!("records: {n}");
        }
        Command::Label { hallucinated, base } => {
            let labeled = assign_labels(
                &TokenSeq::from_whitespace(&hallucinated)?,
                &TokenSeq::from_whitespace(&base)?,
            )?;
            println!("{}", serialize_annotation_line(&labeled)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
