use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use docalign::commands::{
    cmd_analyze, cmd_baseline_nostruct, cmd_baseline_objdet, cmd_baseline_random, cmd_compare, cmd_eval, cmd_gen,
    cmd_predict, cmd_train, objdet_json, ScoreSource, TrainRun,
};
use docalign::core::corpus::{GeneratorProfile, Split, TextEncoder};
use docalign::core::eval::{EvalReport, DEFAULT_CUTOFFS};
use docalign::core::simfn::{KPolicy, SimKind};
use docalign::core::training::{EpochLog, TrainConfig, TrainMode};
use docalign::dataset::{read_json, write_json};
use docalign::reports::{eval_report_json, AnalysisJson};
use docalign::{Error, Result};
use serde::Serialize;

/// Unsupervised image-sentence link discovery in multi-image, multi-sentence
/// documents.
#[derive(Debug, Parser)]
#[command(name = "docalign", version)]
struct Cli {
    /// Seed overriding the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config for the subcommand; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-document work. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Train encoders and write a checkpoint plus CSV log.
    Train(TrainArgs),
    /// Write per-document score matrices and predicted alignments.
    Predict(PredictArgs),
    /// Score predictions or a checkpoint against gold links.
    Eval(EvalArgs),
    /// Run a comparison system.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Regress per-document AUC on spread and content, or compare two
    /// reports.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Mscoco,
    #[value(name = "dii_stress", alias = "dii-stress")]
    DiiStress,
    Topical,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Starting profile when no config is given.
    #[arg(long, value_enum, default_value = "mscoco")]
    profile: Preset,
    #[arg(long)]
    n_docs: Option<usize>,
    #[arg(long)]
    dev_docs: Option<usize>,
    #[arg(long)]
    test_docs: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    topic_count: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimArg {
    Dc,
    Tk,
    Ap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    #[value(name = "full_min", alias = "full-min")]
    FullMin,
    #[value(name = "half_min", alias = "half-min")]
    HalfMin,
}

impl From<PolicyArg> for KPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::FullMin => KPolicy::FullMin,
            PolicyArg::HalfMin => KPolicy::HalfMin,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncoderArg {
    Feat,
    #[value(name = "mean_embed", alias = "mean-embed")]
    MeanEmbed,
}

impl From<EncoderArg> for TextEncoder {
    fn from(e: EncoderArg) -> Self {
        match e {
            EncoderArg::Feat => TextEncoder::Feat,
            EncoderArg::MeanEmbed => TextEncoder::MeanEmbed,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum)]
    simfn: Option<SimArg>,
    #[arg(long, value_enum)]
    k_policy: Option<PolicyArg>,
    /// Negative sets per side.
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    hard_neg: Option<bool>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    d_multi: Option<usize>,
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    max_items: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum)]
    text_encoder: Option<EncoderArg>,
    /// Print one line per epoch to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long)]
    out: PathBuf,
    /// Edge cap for the predicted alignment; defaults to the checkpoint's
    /// policy for capped AP, otherwise full rank.
    #[arg(long, value_enum)]
    k_policy: Option<PolicyArg>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    predictions: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Precision cutoffs.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CUTOFFS)]
    cutoffs: Vec<usize>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BaselineCommand {
    /// Label-embedding matching with a sweep over the top-K labels.
    Objdet {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long, default_value_t = 20)]
        max_tokens: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Uniform random scores.
    Random {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CUTOFFS)]
        cutoffs: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on single random sentence-image pairs and evaluate.
    NostructTrain {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CUTOFFS)]
        cutoffs: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Evaluation report with per-document AUC.
    #[arg(long, required_unless_present = "compare")]
    report: Option<PathBuf>,
    #[arg(long, required_unless_present = "compare")]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long, value_enum, default_value = "feat")]
    text_encoder: EncoderArg,
    #[arg(long, default_value_t = 20)]
    max_tokens: usize,
    /// Spearman correlation between two reports' per-document AUC.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "report")]
    compare: Option<Vec<PathBuf>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value).expect("in-memory JSON");
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn summarize(report: &EvalReport) {
    let mut line = match report.macro_avg.auc {
        Some(auc) => format!("macro AUC {auc:.2}"),
        None => "macro AUC n/a".to_owned(),
    };
    for (c, p) in report.cutoffs.iter().zip(&report.macro_avg.precision) {
        if let Some(p) = p {
            line.push_str(&format!("  p@{c} {p:.2}"));
        }
    }
    eprintln!("{line} ({} documents, {} skipped)", report.per_document.len(), report.skipped.len());
}

fn gen_profile(cli: &Cli, args: &GenArgs) -> Result<GeneratorProfile> {
    let mut p = match &cli.config {
        Some(path) => read_json(path).map_err(|e| Error::Config(e.to_string()))?,
        None => match args.profile {
            Preset::Mscoco => GeneratorProfile::mscoco_like(),
            Preset::DiiStress => GeneratorProfile::dii_stress_like(),
            Preset::Topical => GeneratorProfile::topical_like(),
        },
    };
    p.n_docs = args.n_docs.unwrap_or(p.n_docs);
    p.dev_docs = args.dev_docs.or(p.dev_docs);
    p.test_docs = args.test_docs.or(p.test_docs);
    p.latent_dim = args.latent_dim.unwrap_or(p.latent_dim);
    p.noise_sigma = args.noise_sigma.unwrap_or(p.noise_sigma);
    p.topic_count = args.topic_count.unwrap_or(p.topic_count);
    p.vocab_size = args.vocab_size.unwrap_or(p.vocab_size);
    p.seed = cli.seed.unwrap_or(p.seed);
    p.validate()?;
    Ok(p)
}

fn train_run(cli: &Cli, args: &TrainArgs) -> Result<TrainRun> {
    let defaults = TrainRun {
        data: PathBuf::from("."),
        checkpoint: PathBuf::from("checkpoint.json"),
        log: PathBuf::from("train_log.csv"),
        config: TrainConfig::default(),
    };
    let mut run = match &cli.config {
        Some(path) => {
            let value = read_json(path).map_err(|e| Error::Config(e.to_string()))?;
            TrainRun::from_json(value, &defaults)?
        }
        None => defaults,
    };
    let c = &mut run.config;
    if let Some(s) = args.simfn {
        c.simfn = match s {
            SimArg::Dc => SimKind::Dc,
            SimArg::Tk => SimKind::Tk,
            SimArg::Ap => SimKind::Ap,
        };
    }
    c.k_policy = args.k_policy.map(KPolicy::from).or(c.k_policy);
    c.negatives = args.b.unwrap_or(c.negatives);
    c.margin = args.margin.unwrap_or(c.margin);
    c.hard_negatives = args.hard_neg.unwrap_or(c.hard_negatives);
    c.lr = args.lr.unwrap_or(c.lr);
    c.epochs = args.epochs.unwrap_or(c.epochs);
    c.dropout = args.dropout.unwrap_or(c.dropout);
    c.d_multi = args.d_multi.unwrap_or(c.d_multi);
    c.max_tokens = args.max_tokens.unwrap_or(c.max_tokens);
    c.max_items_per_doc = args.max_items.or(c.max_items_per_doc);
    c.batch_size = args.batch_size.unwrap_or(c.batch_size);
    c.text_encoder = args.text_encoder.map(TextEncoder::from).unwrap_or(c.text_encoder);
    c.seed = cli.seed.unwrap_or(c.seed);
    run.data = args.data.clone().unwrap_or(run.data);
    run.checkpoint = args.checkpoint.clone().unwrap_or(run.checkpoint);
    run.log = args.log.clone().unwrap_or(run.log);
    run.config.validate()?;
    Ok(run)
}

fn progress(verbose: bool) -> impl FnMut(&EpochLog) {
    move |r: &EpochLog| {
        if verbose {
            let auc = r.dev_auc.map_or_else(|| "n/a".to_owned(), |a| format!("{a:.2}"));
            eprintln!(
                "epoch {:>3}  train {:.5}  dev {:.5}  dev AUC {auc}  lr {:.2e}",
                r.epoch, r.train_loss, r.dev_loss, r.lr
            );
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(args) => {
            let profile = gen_profile(cli, args)?;
            let manifest = cmd_gen(&profile, &args.out)?;
            eprintln!(
                "wrote {} / {} / {} documents to {}",
                manifest.train.documents,
                manifest.dev.documents,
                manifest.test.documents,
                args.out.display()
            );
        }
        Command::Train(args) => {
            let run = train_run(cli, args)?;
            let (ckpt, _) = cmd_train(&run, progress(args.verbose))?;
            eprintln!("best epoch {} written to {}", ckpt.epoch, run.checkpoint.display());
        }
        Command::Predict(args) => {
            let records = cmd_predict(
                &args.checkpoint,
                &args.data,
                args.split.into(),
                &args.out,
                args.k_policy.map(KPolicy::from),
                cli.threads,
            )?;
            eprintln!("wrote {} predictions to {}", records.len(), args.out.display());
        }
        Command::Eval(args) => {
            let source = match (&args.predictions, &args.checkpoint) {
                (Some(p), _) => ScoreSource::Predictions(p.clone()),
                (None, Some(c)) => ScoreSource::Checkpoint(c.clone()),
                (None, None) => return Err(Error::Config("--predictions or --checkpoint is required".into())),
            };
            let report = cmd_eval(&source, &args.data, args.split.into(), &args.cutoffs, cli.threads)?;
            summarize(&report);
            emit(&eval_report_json(&report), args.out.as_deref())?;
        }
        Command::Baseline(BaselineCommand::Objdet { data, split, max_tokens, out }) => {
            let sweep = cmd_baseline_objdet(data, (*split).into(), *max_tokens)?;
            eprint!("best K {}: ", sweep.best_k);
            summarize(&sweep.reports[sweep.best_k - 1].1);
            emit(&objdet_json(&sweep), out.as_deref())?;
        }
        Command::Baseline(BaselineCommand::Random { data, split, cutoffs, out }) => {
            let report = cmd_baseline_random(data, (*split).into(), cutoffs, cli.seed.unwrap_or(0), cli.threads)?;
            summarize(&report);
            emit(&eval_report_json(&report), out.as_deref())?;
        }
        Command::Baseline(BaselineCommand::NostructTrain { train, split, cutoffs, out }) => {
            let mut run = train_run(cli, train)?;
            run.config.mode = TrainMode::Nostruct;
            let (_, report) =
                cmd_baseline_nostruct(&run, (*split).into(), cutoffs, cli.threads, progress(train.verbose))?;
            summarize(&report);
            emit(&eval_report_json(&report), out.as_deref())?;
        }
        Command::Analyze(args) => {
            if let Some(pair) = &args.compare {
                let cmp = cmd_compare(&pair[0], &pair[1])?;
                eprintln!("spearman {:.4} over {} documents", cmp.spearman, cmp.documents);
                emit(&cmp, args.out.as_deref())?;
            } else {
                let (Some(report), Some(data)) = (&args.report, &args.data) else {
                    return Err(Error::Config("--report and --data are required".into()));
                };
                let result = cmd_analyze(report, data, args.split.into(), args.text_encoder.into(), args.max_tokens)?;
                eprintln!(
                    "R2 spread {:.4}, spread+content {:.4}",
                    result.spread_only.r_squared, result.spread_plus_content.r_squared
                );
                emit(&AnalysisJson::from(&result), args.out.as_deref())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
