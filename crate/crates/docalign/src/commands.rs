//! The work behind each subcommand, independent of argument parsing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use docalign_core::analysis::{difficulty_regression, DifficultyReport};
use docalign_core::baselines::{objdet_sweep, random_matrix, ObjdetSweep};
use docalign_core::corpus::{generate_synthetic, Corpus, DocInputs, GeneratorProfile, Split, TextEncoder};
use docalign_core::eval::{evaluate_corpus, predict_matrix, predicted_alignment, spearman, EvalReport};
use docalign_core::simfn::{KPolicy, SimKind};
use docalign_core::training::{train_with_progress, Checkpoint, EpochLog, TrainConfig, TrainLog, TrainMode};
use docalign_core::{rng, Mat};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::dataset::{read_jsonl, write_jsonl, DataDir, Manifest};
use crate::error::{Error, Result};
use crate::reports::{eval_report_json, load_report_aucs, matrix_rows, save_train_log, PredictionRecord};

/// Runs `f` on a pool of `threads` workers, or on the global pool when
/// `None`. Per-document results are collected in document order, so output
/// does not depend on the thread count.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn per_document<T: Send>(
    threads: Option<usize>,
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    with_threads(threads, || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>())?
}

pub fn cmd_gen(profile: &GeneratorProfile, out: &Path) -> Result<Manifest> {
    let data = generate_synthetic(profile)?;
    DataDir::new(out).save_synthetic(&data, profile)
}

/// Inputs and outputs of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub data: PathBuf,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub config: TrainConfig,
}

const RUN_KEYS: [&str; 3] = ["data", "checkpoint", "log"];

impl TrainRun {
    /// Parses a run file: every [`TrainConfig`] key plus `data`,
    /// `checkpoint`, and `log` paths. Unknown keys are rejected; missing
    /// paths fall back to `defaults`.
    pub fn from_json(value: Value, defaults: &TrainRun) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(Error::Config("train config must be a JSON object".into()));
        };
        let mut path = |key: &str, fallback: &Path| -> Result<PathBuf> {
            match map.remove(key) {
                None => Ok(fallback.to_owned()),
                Some(Value::String(s)) => Ok(PathBuf::from(s)),
                Some(other) => Err(Error::Config(format!("{key} must be a string, got {other}"))),
            }
        };
        let data = path(RUN_KEYS[0], &defaults.data)?;
        let checkpoint = path(RUN_KEYS[1], &defaults.checkpoint)?;
        let log = path(RUN_KEYS[2], &defaults.log)?;
        let config: TrainConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(format!("train config: {e}")))?;
        Ok(TrainRun { data, checkpoint, log, config })
    }
}

/// Trains on the `train` split, selects on `dev`, and writes the checkpoint
/// and CSV log.
pub fn cmd_train(run: &TrainRun, progress: impl FnMut(&EpochLog)) -> Result<(Checkpoint, TrainLog)> {
    run.config.validate()?;
    let dir = DataDir::new(&run.data);
    let tables = dir.load_tables()?;
    let train = dir.load_split(Split::Train, &tables)?;
    let dev = dir.load_split(Split::Dev, &tables)?;
    let (ckpt, log) = train_with_progress(&train, &dev, &run.config, progress)?;
    save_checkpoint(&run.checkpoint, &ckpt)?;
    save_train_log(&run.log, &log)?;
    Ok((ckpt, log))
}

fn model_matrices(ckpt: &Checkpoint, corpus: &Corpus, threads: Option<usize>) -> Result<Vec<Mat>> {
    let cfg = &ckpt.config;
    let inputs: Vec<DocInputs> = per_document(threads, corpus.len(), |i| {
        let doc = &corpus.documents[i];
        Ok(DocInputs {
            sentences: corpus.sentence_vectors(doc, cfg.text_encoder, cfg.max_tokens)?,
            images: corpus.image_vectors(doc)?,
        })
    })?;
    if let Some(first) = inputs.first() {
        if first.sentences.cols() != ckpt.params.sentence_dim() || first.images.cols() != ckpt.params.image_dim() {
            return Err(Error::Config("checkpoint input dimensions do not match the corpus features".into()));
        }
    }
    per_document(threads, inputs.len(), |i| Ok(predict_matrix(&inputs[i], &ckpt.params)?))
}

/// The edge cap used for predicted alignments: an explicit policy, or the
/// checkpoint's policy when it was trained with a capped assignment.
fn alignment_cap(ckpt: &Checkpoint, policy: Option<KPolicy>) -> Option<KPolicy> {
    policy.or(match ckpt.config.simfn {
        SimKind::Ap => ckpt.config.k_policy,
        _ => None,
    })
}

/// Scores every document of `split` and writes one prediction per line.
pub fn cmd_predict(
    checkpoint: &Path,
    data: &Path,
    split: Split,
    out: &Path,
    policy: Option<KPolicy>,
    threads: Option<usize>,
) -> Result<Vec<PredictionRecord>> {
    let ckpt = load_checkpoint(checkpoint)?;
    let dir = DataDir::new(data);
    let corpus = dir.load_split(split, &dir.load_tables()?)?;
    let matrices = model_matrices(&ckpt, &corpus, threads)?;
    let cap = alignment_cap(&ckpt, policy);
    let records = per_document(threads, matrices.len(), |i| {
        let m = &matrices[i];
        let k = cap.map(|p| p.resolve(m.rows(), m.cols()));
        Ok(PredictionRecord {
            id: corpus.documents[i].id.clone(),
            matrix: matrix_rows(m),
            edges: predicted_alignment(m, k)?.edges,
        })
    })?;
    write_jsonl(out, &records)?;
    Ok(records)
}

/// Where evaluation scores come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreSource {
    Predictions(PathBuf),
    Checkpoint(PathBuf),
}

fn evaluate_matrices(corpus: &Corpus, matrices: Vec<Mat>, cutoffs: &[usize]) -> Result<EvalReport> {
    let mut slots: Vec<Option<Mat>> = matrices.into_iter().map(Some).collect();
    Ok(evaluate_corpus(&corpus.documents, cutoffs, |i, _| {
        slots[i].take().ok_or(docalign_core::Error::Empty("score matrix"))
    })?)
}

pub fn cmd_eval(
    source: &ScoreSource,
    data: &Path,
    split: Split,
    cutoffs: &[usize],
    threads: Option<usize>,
) -> Result<EvalReport> {
    let dir = DataDir::new(data);
    let corpus = dir.load_split(split, &dir.load_tables()?)?;
    let matrices = match source {
        ScoreSource::Checkpoint(path) => model_matrices(&load_checkpoint(path)?, &corpus, threads)?,
        ScoreSource::Predictions(path) => {
            let mut by_id: BTreeMap<String, PredictionRecord> =
                read_jsonl::<PredictionRecord>(path)?.into_iter().map(|r| (r.id.clone(), r)).collect();
            corpus
                .documents
                .iter()
                .map(|doc| {
                    let record = by_id
                        .remove(&doc.id)
                        .ok_or_else(|| Error::Config(format!("{}: no prediction for {}", path.display(), doc.id)))?;
                    let m = record.matrix()?;
                    if m.shape() != (doc.n(), doc.m()) {
                        return Err(Error::Config(format!(
                            "prediction for {} is {}x{}, document is {}x{}",
                            doc.id,
                            m.rows(),
                            m.cols(),
                            doc.n(),
                            doc.m()
                        )));
                    }
                    Ok(m)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    evaluate_matrices(&corpus, matrices, cutoffs)
}

/// Uniform random scores; document `i` draws from its own stream of `seed`.
pub fn cmd_baseline_random(
    data: &Path,
    split: Split,
    cutoffs: &[usize],
    seed: u64,
    threads: Option<usize>,
) -> Result<EvalReport> {
    let dir = DataDir::new(data);
    let corpus = dir.load_split(split, &dir.load_tables()?)?;
    let matrices = per_document(threads, corpus.len(), |i| {
        let doc = &corpus.documents[i];
        Ok(random_matrix(doc.n(), doc.m(), &mut rng::stream(seed, i as u64)))
    })?;
    evaluate_matrices(&corpus, matrices, cutoffs)
}

pub fn cmd_baseline_objdet(data: &Path, split: Split, max_tokens: usize) -> Result<ObjdetSweep> {
    let dir = DataDir::new(data);
    let tables = dir.load_tables()?;
    let embeddings = tables
        .embeddings
        .clone()
        .ok_or_else(|| Error::Config(format!("{} is required for objdet", dir.embeddings().display())))?;
    let corpus = dir.load_split(split, &tables)?;
    let labels = dir.load_labels()?;
    Ok(objdet_sweep(&corpus, &labels, &embeddings, max_tokens)?)
}

pub fn objdet_json(sweep: &ObjdetSweep) -> Value {
    let rows: Vec<Value> = sweep
        .reports
        .iter()
        .map(|(k, r)| {
            let mut row = serde_json::Map::new();
            row.insert("k".into(), json!(k));
            row.insert("auc".into(), json!(r.macro_avg.auc));
            for (c, p) in r.cutoffs.iter().zip(&r.macro_avg.precision) {
                row.insert(format!("p{c}"), json!(p));
            }
            Value::Object(row)
        })
        .collect();
    let best = &sweep.reports[sweep.best_k - 1].1;
    json!({"best_k": sweep.best_k, "sweep": rows, "report": eval_report_json(best)})
}

/// Trains the NoStruct baseline and evaluates it on `split`.
pub fn cmd_baseline_nostruct(
    run: &TrainRun,
    split: Split,
    cutoffs: &[usize],
    threads: Option<usize>,
    progress: impl FnMut(&EpochLog),
) -> Result<(Checkpoint, EvalReport)> {
    let run = TrainRun { config: TrainConfig { mode: TrainMode::Nostruct, ..run.config.clone() }, ..run.clone() };
    let (ckpt, _) = cmd_train(&run, progress)?;
    let report = cmd_eval(&ScoreSource::Checkpoint(run.checkpoint.clone()), &run.data, split, cutoffs, threads)?;
    Ok((ckpt, report))
}

pub fn cmd_analyze(
    report: &Path,
    data: &Path,
    split: Split,
    text_encoder: TextEncoder,
    max_tokens: usize,
) -> Result<DifficultyReport> {
    let aucs = load_report_aucs(report)?;
    let dir = DataDir::new(data);
    let corpus = dir.load_split(split, &dir.load_tables()?)?;
    Ok(difficulty_regression(&aucs, &corpus, text_encoder, max_tokens)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub spearman: f64,
    pub documents: usize,
}

/// Spearman correlation of two reports' AUCs over the documents both
/// contain.
pub fn cmd_compare(a: &Path, b: &Path) -> Result<Comparison> {
    let left = load_report_aucs(a)?;
    let right: BTreeMap<String, f64> = load_report_aucs(b)?.into_iter().collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = left.iter().filter_map(|(id, x)| right.get(id).map(|y| (*x, *y))).unzip();
    Ok(Comparison { spearman: spearman(&xs, &ys)?, documents: xs.len() })
}
