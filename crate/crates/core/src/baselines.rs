//! Training-free comparison systems.
//!
//! The object-detection baseline represents each image by the mean word
//! embedding of its top-K predicted class labels and each sentence by its
//! mean word embedding; the random baseline scores every edge uniformly.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::corpus::{embed_sentence_mean, Corpus, Document, EmbeddingTable};
use crate::eval::{evaluate_corpus, EvalReport, DEFAULT_CUTOFFS};
use crate::linalg::{axpy, dot, norm};
use crate::rng::Rng;
use crate::{Error, Mat, Result};

/// Largest K tried by [`objdet_sweep`].
pub const MAX_SWEEP_K: usize = 20;

/// Per-image class labels with probabilities, most probable first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelFile {
    entries: BTreeMap<String, Vec<(String, f64)>>,
}

impl LabelFile {
    pub fn insert(&mut self, image: String, labels: Vec<(String, f64)>) -> Result<()> {
        let valid = !labels.is_empty()
            && labels.iter().all(|(l, p)| !l.trim().is_empty() && (0.0..=1.0).contains(p))
            && labels.windows(2).all(|w| w[0].1 >= w[1].1);
        if !valid {
            return Err(Error::InvalidLabels(image));
        }
        if self.entries.contains_key(&image) {
            return Err(Error::DuplicateId(image));
        }
        self.entries.insert(image, labels);
        Ok(())
    }

    pub fn get(&self, image: &str) -> Option<&[(String, f64)]> {
        self.entries.get(image).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(String, f64)])> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Mean of the top-`k` label embeddings. A multi-word label (split on
/// whitespace and `_`) contributes the mean of its in-vocabulary words;
/// labels with no known word are skipped. The flag is set when every label
/// was skipped, in which case the vector is zero.
pub fn objdet_image_rep(labels: &[(String, f64)], k: usize, table: &EmbeddingTable) -> (Vec<f64>, bool) {
    let mut sum = vec![0.0; table.dim()];
    let mut used = 0usize;
    for (label, _) in labels.iter().take(k.max(1)) {
        let words: Vec<&str> = label.split(|c: char| c.is_whitespace() || c == '_').filter(|w| !w.is_empty()).collect();
        let mean = embed_sentence_mean(&words, table, usize::MAX);
        if !mean.all_oov {
            axpy(1.0, &mean.vector, &mut sum);
            used += 1;
        }
    }
    if used > 0 {
        sum.iter_mut().for_each(|x| *x /= used as f64);
    }
    (sum, used == 0)
}

/// Cosine, defined as 0 when either side is the zero vector.
fn safe_cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Association matrix of the object-detection baseline for one document.
/// Sentences without tokens count as fully out of vocabulary.
pub fn objdet_matrix(
    doc: &Document,
    labels: &LabelFile,
    k: usize,
    table: &EmbeddingTable,
    max_tokens: usize,
) -> Result<Mat> {
    let images = doc
        .images
        .iter()
        .map(|v| {
            let entry =
                labels.get(&v.id).or_else(|| labels.get(&v.feat)).ok_or_else(|| Error::MissingLabels(v.id.clone()))?;
            Ok(objdet_image_rep(entry, k, table).0)
        })
        .collect::<Result<Vec<_>>>()?;
    let sentences: Vec<Vec<f64>> = doc
        .sentences
        .iter()
        .map(|s| embed_sentence_mean(s.tokens.as_deref().unwrap_or(&[]), table, max_tokens).vector)
        .collect();
    Ok(Mat::from_fn(doc.n(), doc.m(), |i, j| safe_cosine(&sentences[i], &images[j])))
}

/// Result of sweeping K over `1..=MAX_SWEEP_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjdetSweep {
    pub best_k: usize,
    /// `(K, report)` for every K, in increasing K.
    pub reports: Vec<(usize, EvalReport)>,
}

/// Evaluates K = 1..=20 and keeps the K with the best macro AUC, smallest K
/// on ties.
pub fn objdet_sweep(
    corpus: &Corpus,
    labels: &LabelFile,
    table: &EmbeddingTable,
    max_tokens: usize,
) -> Result<ObjdetSweep> {
    let mut reports = Vec::with_capacity(MAX_SWEEP_K);
    let mut best: Option<(usize, f64)> = None;
    for k in 1..=MAX_SWEEP_K {
        let report = evaluate_corpus(&corpus.documents, &DEFAULT_CUTOFFS, |_, doc| {
            objdet_matrix(doc, labels, k, table, max_tokens)
        })?;
        let auc = report.macro_avg.auc.unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(_, b)| auc > b) {
            best = Some((k, auc));
        }
        reports.push((k, report));
    }
    Ok(ObjdetSweep { best_k: best.map_or(1, |b| b.0), reports })
}

/// I.i.d. `Uniform[0, 1)` scores.
pub fn random_matrix(n: usize, m: usize, rng: &mut Rng) -> Mat {
    Mat::from_fn(n, m, |_, _| rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ImageItem, SentenceItem};
    use crate::rng::seeded;
    use alloc::borrow::ToOwned;
    use alloc::format;
    use alloc::string::ToString;

    fn table(rows: &[(&str, [f64; 2])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2).unwrap();
        for (w, v) in rows {
            t.insert(*w, v).unwrap();
        }
        t
    }

    fn labels(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
        pairs.iter().map(|(l, p)| (l.to_string(), *p)).collect()
    }

    fn doc(sentences: &[&[&str]], images: &[&str]) -> Document {
        Document {
            id: "d".into(),
            sentences: sentences
                .iter()
                .enumerate()
                .map(|(i, t)| SentenceItem {
                    id: format!("s{i}"),
                    tokens: Some(t.iter().map(|x| x.to_string()).collect()),
                    feat: None,
                })
                .collect(),
            images: images.iter().map(|v| ImageItem { id: v.to_string(), feat: v.to_string() }).collect(),
            gold: Some(vec![(0, 0)]),
        }
    }

    #[test]
    fn label_file_validation() {
        let mut f = LabelFile::default();
        assert!(f.insert("a".into(), vec![]).is_err());
        assert!(f.insert("a".into(), labels(&[("x", 0.2), ("y", 0.9)])).is_err());
        assert!(f.insert("a".into(), labels(&[("x", 1.5)])).is_err());
        f.insert("a".into(), labels(&[("x", 0.9), ("y", 0.1)])).unwrap();
        assert!(matches!(f.insert("a".into(), labels(&[("x", 0.9)])), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn image_rep_examples() {
        let t = table(&[("dog", [1.0, 0.0]), ("cat", [0.0, 1.0]), ("hot", [1.0, 1.0])]);
        assert_eq!(objdet_image_rep(&labels(&[("dog", 0.9)]), 1, &t).0, [1.0, 0.0]);
        // K beyond the label count averages everything.
        assert_eq!(objdet_image_rep(&labels(&[("dog", 0.9), ("cat", 0.1)]), 10, &t).0, [0.5, 0.5]);
        // Multi-word labels average their known words; unknown labels drop out.
        let l = labels(&[("hot_dog", 0.5), ("zebra", 0.3), ("cat", 0.2)]);
        let (v, oov) = objdet_image_rep(&l, 3, &t);
        assert!(!oov);
        assert_eq!(v, [(1.0 + 0.0) / 2.0, (0.5 + 1.0) / 2.0]);
        let (v, oov) = objdet_image_rep(&labels(&[("zebra", 1.0)]), 1, &t);
        assert!(oov);
        assert_eq!(v, [0.0, 0.0]);
    }

    #[test]
    fn image_rep_top_two_is_manual_mean() {
        let t = table(&[("a", [1.0, 2.0]), ("b", [3.0, -1.0]), ("c", [7.0, 7.0])]);
        let l = labels(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        assert_eq!(objdet_image_rep(&l, 2, &t).0, [2.0, 0.5]);
    }

    #[test]
    fn matrix_examples() {
        let t = table(&[("dog", [1.0, 0.0]), ("cat", [0.0, 1.0])]);
        let mut f = LabelFile::default();
        f.insert("v0".into(), labels(&[("dog", 1.0)])).unwrap();
        f.insert("v1".into(), labels(&[("cat", 1.0)])).unwrap();
        let d = doc(&[&["dog"], &["unknown"]], &["v0", "v1"]);
        let m = objdet_matrix(&d, &f, 1, &t, 20).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 0)], 0.0);
        let missing = doc(&[&["dog"]], &["v9"]);
        assert_eq!(objdet_matrix(&missing, &f, 1, &t, 20), Err(Error::MissingLabels("v9".to_owned())));
    }

    #[test]
    fn random_matrix_contract() {
        let a = random_matrix(4, 5, &mut seeded(1));
        assert_eq!(a, random_matrix(4, 5, &mut seeded(1)));
        assert!(a.as_slice().iter().all(|&x| (0.0..1.0).contains(&x)));
    }
}
