//! JSON and CSV outputs: evaluation reports, predictions, training logs, and
//! analysis results.

use std::fs::File;
use std::path::Path;

use docalign_core::analysis::{DifficultyReport, DocDifficulty, OlsFit};
use docalign_core::eval::EvalReport;
use docalign_core::training::TrainLog;
use docalign_core::Mat;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dataset::read_json;
use crate::error::{Error, Result};

fn precision_key(c: usize) -> String {
    format!("p{c}")
}

/// JSON form of an [`EvalReport`]. Precision values appear under `p<C>`
/// keys, one per cutoff.
pub fn eval_report_json(report: &EvalReport) -> Value {
    let mut macro_avg = Map::new();
    macro_avg.insert("auc".into(), json!(report.macro_avg.auc));
    for (c, p) in report.cutoffs.iter().zip(&report.macro_avg.precision) {
        macro_avg.insert(precision_key(*c), json!(p));
    }
    let per_document: Vec<Value> = report
        .per_document
        .iter()
        .map(|d| {
            let mut row = Map::new();
            row.insert("id".into(), json!(d.doc_id));
            row.insert("n".into(), json!(d.n));
            row.insert("m".into(), json!(d.m));
            row.insert("n_gold".into(), json!(d.n_gold));
            row.insert("auc".into(), json!(d.auc));
            for (c, p) in report.cutoffs.iter().zip(&d.precision) {
                row.insert(precision_key(*c), json!(p));
            }
            Value::Object(row)
        })
        .collect();
    let skipped: Vec<Value> =
        report.skipped.iter().map(|s| json!({"id": s.doc_id, "reason": s.reason.as_str()})).collect();
    json!({
        "cutoffs": report.cutoffs,
        "documents": report.per_document.len(),
        "macro": macro_avg,
        "per_document": per_document,
        "skipped": skipped,
    })
}

#[derive(Debug, Deserialize)]
struct ReportRow {
    id: String,
    auc: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ReportAucs {
    per_document: Vec<ReportRow>,
}

/// Per-document AUCs of a saved evaluation report, in file order.
pub fn load_report_aucs(path: &Path) -> Result<Vec<(String, f64)>> {
    let value: Value = read_json(path)?;
    // An objdet sweep nests the chosen report.
    let value = value.get("report").cloned().unwrap_or(value);
    let parsed: ReportAucs = serde_json::from_value(value).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(parsed.per_document.into_iter().filter_map(|r| Some((r.id, r.auc?))).collect())
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub matrix: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl PredictionRecord {
    pub fn matrix(&self) -> Result<Mat> {
        Ok(Mat::from_rows(&self.matrix)?)
    }
}

pub fn matrix_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

#[derive(Debug, Serialize)]
struct LogRow {
    epoch: usize,
    train_loss: f64,
    dev_loss: f64,
    dev_auc: Option<f64>,
    lr: f64,
}

/// Writes `epoch,train_loss,dev_loss,dev_auc,lr` rows; a missing dev AUC is
/// an empty field.
pub fn save_train_log(path: &Path, log: &TrainLog) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| Error::io(path, e.into());
    if log.epochs.is_empty() {
        out.write_record(["epoch", "train_loss", "dev_loss", "dev_auc", "lr"]).map_err(wrap)?;
    }
    for r in &log.epochs {
        out.serialize(LogRow {
            epoch: r.epoch,
            train_loss: r.train_loss,
            dev_loss: r.dev_loss,
            dev_auc: r.dev_auc,
            lr: r.lr,
        })
        .map_err(wrap)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub r2: f64,
    /// `null` for a perfect fit.
    pub f: Option<f64>,
    /// `[model, residual]` degrees of freedom.
    pub dof: [usize; 2],
    pub coefficients: Vec<f64>,
}

impl From<&OlsFit> for FitSummary {
    fn from(fit: &OlsFit) -> Self {
        FitSummary {
            r2: fit.r_squared,
            f: fit.f_statistic.is_finite().then_some(fit.f_statistic),
            dof: [fit.dof_model, fit.dof_residual],
            coefficients: fit.coefficients.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisJson<'a> {
    pub spread_only: FitSummary,
    pub spread_plus_content: FitSummary,
    pub content_dims_used: usize,
    pub dropped_regressors: usize,
    pub per_document: &'a [DocDifficulty],
}

impl<'a> From<&'a DifficultyReport> for AnalysisJson<'a> {
    fn from(r: &'a DifficultyReport) -> Self {
        AnalysisJson {
            spread_only: (&r.spread_only).into(),
            spread_plus_content: (&r.spread_plus_content).into(),
            content_dims_used: r.content_dims_used,
            dropped_regressors: r.dropped_regressors,
            per_document: &r.per_document,
        }
    }
}
