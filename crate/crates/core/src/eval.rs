//! Intra-document link-prediction metrics.
//!
//! Every document is scored on its own: the `n x m` association matrix ranks
//! all candidate sentence–image edges and is compared with the gold edges.
//! Corpus numbers are unweighted means over documents.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::{solve_assignment, solve_assignment_capped};
use crate::corpus::{DocInputs, Document};
use crate::encoders::{encode_eval, EncoderParams, Side};
use crate::simfn::cosine_matrix;
use crate::{Error, Mat, Result, SkipReason};

/// The precision cutoffs reported by default.
pub const DEFAULT_CUTOFFS: [usize; 2] = [1, 5];

/// Association matrix of one document under eval-mode encoders.
pub fn predict_matrix(inputs: &DocInputs, params: &EncoderParams) -> Result<Mat> {
    let sentences = encode_eval(&inputs.sentences, Side::Sentence, params)?;
    let images = encode_eval(&inputs.images, Side::Image, params)?;
    cosine_matrix(&sentences, &images)
}

/// Fractional 1-based ranks in ascending order; tied values share the mean
/// of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn gold_mask(scores: &Mat, gold: &[(usize, usize)]) -> Result<Vec<bool>> {
    let (n, m) = scores.shape();
    let mut mask = vec![false; n * m];
    for &(s, v) in gold {
        if s >= n || v >= m {
            return Err(Error::GoldIndexOutOfRange { doc: String::new(), s, v, n, m });
        }
        mask[s * m + v] = true;
    }
    Ok(mask)
}

/// AUROC in `[0, 100]` over all `n * m` candidate edges, via the
/// Mann–Whitney rank-sum with average ranks for ties.
///
/// Returns [`Error::Skip`] when the gold set is empty or covers every edge.
pub fn doc_auc(scores: &Mat, gold: &[(usize, usize)]) -> Result<f64> {
    let mask = gold_mask(scores, gold)?;
    let n_pos = mask.iter().filter(|&&g| g).count();
    let n_neg = mask.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::Skip(SkipReason::NoGold));
    }
    if n_neg == 0 {
        return Err(Error::Skip(SkipReason::CompleteGold));
    }
    if !scores.is_finite() {
        return Err(Error::NonFinite("association matrix"));
    }
    let ranks = average_ranks(scores.as_slice());
    let rank_sum: f64 = ranks.iter().zip(&mask).filter(|(_, &g)| g).map(|(r, _)| r).sum();
    let pos = n_pos as f64;
    Ok(100.0 * (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * n_neg as f64))
}

/// Percentage of the `min(c, n*m)` highest-scoring edges that are gold.
/// Equal scores are ordered by `(row, col)`.
pub fn doc_precision_at(scores: &Mat, gold: &[(usize, usize)], c: usize) -> Result<f64> {
    if c == 0 {
        return Err(Error::InvalidConfig("precision cutoff must be at least 1".into()));
    }
    let mask = gold_mask(scores, gold)?;
    let values = scores.as_slice();
    let mut order: Vec<usize> = (0..values.len()).collect();
    let take = c.min(values.len());
    let by_score = |a: &usize, b: &usize| values[*b].total_cmp(&values[*a]).then(a.cmp(b));
    if take < order.len() {
        order.select_nth_unstable_by(take - 1, by_score);
    }
    let hits = order[..take].iter().filter(|&&e| mask[e]).count();
    Ok(100.0 * hits as f64 / take as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocMetrics {
    pub doc_id: String,
    /// `None` when every edge is gold.
    pub auc: Option<f64>,
    /// One value per cutoff of the owning report.
    pub precision: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub n_gold: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroMetrics {
    pub auc: Option<f64>,
    pub precision: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub doc_id: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cutoffs: Vec<usize>,
    pub per_document: Vec<DocMetrics>,
    pub macro_avg: MacroMetrics,
    pub skipped: Vec<Skipped>,
}

impl EvalReport {
    fn cutoff_index(&self, c: usize) -> Option<usize> {
        self.cutoffs.iter().position(|&x| x == c)
    }

    /// Macro precision at cutoff `c`, if it was evaluated and any document
    /// was scored.
    pub fn macro_precision(&self, c: usize) -> Option<f64> {
        self.cutoff_index(c).and_then(|k| self.macro_avg.precision[k])
    }

    /// `(doc_id, auc)` for every document with an AUC.
    pub fn auc_by_document(&self) -> Vec<(String, f64)> {
        self.per_document.iter().filter_map(|d| Some((d.doc_id.clone(), d.auc?))).collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Scores every document that has gold edges. `matrix_for` is called once per
/// scored document, in corpus order.
pub fn evaluate_corpus(
    documents: &[Document],
    cutoffs: &[usize],
    mut matrix_for: impl FnMut(usize, &Document) -> Result<Mat>,
) -> Result<EvalReport> {
    if cutoffs.contains(&0) {
        return Err(Error::InvalidConfig("precision cutoff must be at least 1".into()));
    }
    let mut per_document = Vec::new();
    let mut skipped = Vec::new();
    for (index, doc) in documents.iter().enumerate() {
        let gold = doc.gold_edges();
        if gold.is_empty() {
            skipped.push(Skipped { doc_id: doc.id.clone(), reason: SkipReason::NoGold });
            continue;
        }
        let scores = matrix_for(index, doc)?;
        if scores.shape() != (doc.n(), doc.m()) {
            return Err(Error::DimensionMismatch { expected: doc.n() * doc.m(), found: scores.rows() * scores.cols() });
        }
        let auc = match doc_auc(&scores, gold) {
            Ok(auc) => Some(auc),
            Err(Error::Skip(reason)) => {
                skipped.push(Skipped { doc_id: doc.id.clone(), reason });
                None
            }
            Err(e) => return Err(e),
        };
        let precision = cutoffs.iter().map(|&c| doc_precision_at(&scores, gold, c)).collect::<Result<_>>()?;
        per_document.push(DocMetrics {
            doc_id: doc.id.clone(),
            auc,
            precision,
            n: doc.n(),
            m: doc.m(),
            n_gold: gold.len(),
        });
    }
    let macro_avg = MacroMetrics {
        auc: mean(per_document.iter().filter_map(|d| d.auc)),
        precision: (0..cutoffs.len()).map(|k| mean(per_document.iter().map(|d| d.precision[k]))).collect(),
    };
    Ok(EvalReport { cutoffs: cutoffs.to_vec(), per_document, macro_avg, skipped })
}

/// Matched edges `(sentence, image, weight)` in descending weight order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedAlignment {
    pub edges: Vec<(usize, usize, f64)>,
}

/// Optimal one-to-one alignment of a document, optionally limited to the
/// best `cap`-edge matching.
pub fn predicted_alignment(scores: &Mat, cap: Option<usize>) -> Result<PredictedAlignment> {
    let solution = match cap {
        Some(k) => solve_assignment_capped(scores, k)?,
        None => solve_assignment(scores)?,
    };
    let mut edges: Vec<(usize, usize, f64)> = solution.matches.iter().map(|&(i, j)| (i, j, scores[(i, j)])).collect();
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    Ok(PredictedAlignment { edges })
}

/// Spearman rank correlation: Pearson correlation of average-tie ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewObservations { needed: 2, available: xs.len() });
    }
    if xs.iter().chain(ys).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("rank correlation input"));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}
