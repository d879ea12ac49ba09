//! Documents, feature tables, and the synthetic document generator.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::baselines::LabelFile;
use crate::linalg::{axpy, dot, norm};
use crate::rng::{self, Rng};
use crate::{Error, Mat, Result};

/// Id-keyed table of equal-length finite vectors, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f64>,
    index: BTreeMap<String, usize>,
}

/// Word vectors share the feature-table layout and file format.
pub type EmbeddingTable = FeatureTable;

impl FeatureTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("feature dimension"));
        }
        Ok(FeatureTable { dim, ids: Vec::new(), data: Vec::new(), index: BTreeMap::new() })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<()> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!("feature id `{id}` must be a non-empty token")));
        }
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.ids.iter().zip(self.data.chunks_exact(self.dim)).map(|(id, v)| (id.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceItem {
    pub id: String,
    pub tokens: Option<Vec<String>>,
    pub feat: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageItem {
    pub id: String,
    pub feat: String,
}

/// A set of sentences and a set of images that occur together, with optional
/// gold `(sentence, image)` links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<SentenceItem>,
    pub images: Vec<ImageItem>,
    pub gold: Option<Vec<(usize, usize)>>,
}

impl Document {
    pub fn n(&self) -> usize {
        self.sentences.len()
    }

    pub fn m(&self) -> usize {
        self.images.len()
    }

    pub fn gold_edges(&self) -> &[(usize, usize)] {
        self.gold.as_deref().unwrap_or(&[])
    }

    /// Gold edges over all possible sentence–image pairs.
    pub fn density(&self) -> f64 {
        self.gold_edges().len() as f64 / (self.n() * self.m()) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.sentences.is_empty() || self.images.is_empty() {
            return Err(Error::EmptyDocument(self.id.clone()));
        }
        for (index, s) in self.sentences.iter().enumerate() {
            if s.tokens.is_none() && s.feat.is_none() {
                return Err(Error::SentenceWithoutContent { doc: self.id.clone(), index });
            }
        }
        let mut seen = BTreeSet::new();
        for &(s, v) in self.gold_edges() {
            if s >= self.n() || v >= self.m() {
                return Err(Error::GoldIndexOutOfRange { doc: self.id.clone(), s, v, n: self.n(), m: self.m() });
            }
            if !seen.insert((s, v)) {
                return Err(Error::DuplicateGold { doc: self.id.clone(), s, v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// How raw sentence vectors are obtained before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum TextEncoder {
    /// Precomputed sentence feature vectors.
    #[default]
    Feat,
    /// Mean of the word embeddings of the sentence tokens.
    MeanEmbed,
}

/// Raw per-document model inputs: one row per sentence and per image.
#[derive(Debug, Clone, PartialEq)]
pub struct DocInputs {
    pub sentences: Mat,
    pub images: Mat,
}

/// Validated documents of one split plus the tables they reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub split: Split,
    pub sentence_features: Arc<FeatureTable>,
    pub image_features: Arc<FeatureTable>,
    pub embeddings: Option<Arc<EmbeddingTable>>,
}

impl Corpus {
    pub fn new(
        documents: Vec<Document>,
        split: Split,
        sentence_features: Arc<FeatureTable>,
        image_features: Arc<FeatureTable>,
        embeddings: Option<Arc<EmbeddingTable>>,
    ) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for doc in &documents {
            doc.validate()?;
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            for s in &doc.sentences {
                if let Some(feat) = &s.feat {
                    if !sentence_features.contains(feat) {
                        return Err(Error::UnknownFeature(feat.clone()));
                    }
                }
            }
            for v in &doc.images {
                if !image_features.contains(&v.feat) {
                    return Err(Error::UnknownFeature(v.feat.clone()));
                }
            }
        }
        Ok(Corpus { documents, split, sentence_features, image_features, embeddings })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Input dimension of the sentence side under `encoder`.
    pub fn sentence_dim(&self, encoder: TextEncoder) -> Result<usize> {
        match encoder {
            TextEncoder::Feat => Ok(self.sentence_features.dim()),
            TextEncoder::MeanEmbed => self
                .embeddings
                .as_ref()
                .map(|e| e.dim())
                .ok_or_else(|| Error::InvalidConfig("mean_embed text encoder needs an embedding table".into())),
        }
    }

    pub fn image_dim(&self) -> usize {
        self.image_features.dim()
    }

    /// Raw sentence vectors of one document, one row per sentence.
    pub fn sentence_vectors(&self, doc: &Document, encoder: TextEncoder, max_tokens: usize) -> Result<Mat> {
        let dim = self.sentence_dim(encoder)?;
        let mut out = Mat::zeros(doc.n(), dim);
        for (index, s) in doc.sentences.iter().enumerate() {
            match encoder {
                TextEncoder::Feat => {
                    let feat = s.feat.as_ref().ok_or_else(|| Error::MissingSentenceInput {
                        doc: doc.id.clone(),
                        index,
                        wanted: "feature id",
                    })?;
                    let v = self.sentence_features.get(feat).ok_or_else(|| Error::UnknownFeature(feat.clone()))?;
                    out.row_mut(index).copy_from_slice(v);
                }
                TextEncoder::MeanEmbed => {
                    let tokens = s.tokens.as_ref().ok_or_else(|| Error::MissingSentenceInput {
                        doc: doc.id.clone(),
                        index,
                        wanted: "tokens",
                    })?;
                    let table = self.embeddings.as_ref().expect("checked by sentence_dim");
                    let mean = embed_sentence_mean(tokens, table, max_tokens);
                    out.row_mut(index).copy_from_slice(&mean.vector);
                }
            }
        }
        Ok(out)
    }

    pub fn image_vectors(&self, doc: &Document) -> Result<Mat> {
        let mut out = Mat::zeros(doc.m(), self.image_dim());
        for (index, v) in doc.images.iter().enumerate() {
            let feat = self.image_features.get(&v.feat).ok_or_else(|| Error::UnknownFeature(v.feat.clone()))?;
            out.row_mut(index).copy_from_slice(feat);
        }
        Ok(out)
    }

    /// Raw inputs for every document, in corpus order.
    pub fn inputs(&self, encoder: TextEncoder, max_tokens: usize) -> Result<Vec<DocInputs>> {
        self.documents
            .iter()
            .map(|doc| {
                Ok(DocInputs {
                    sentences: self.sentence_vectors(doc, encoder, max_tokens)?,
                    images: self.image_vectors(doc)?,
                })
            })
            .collect()
    }
}

/// Mean word embedding and whether every token was out of vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEmbedding {
    pub vector: Vec<f64>,
    pub all_oov: bool,
}

/// Mean of the embeddings of the first `max_len` in-vocabulary tokens.
/// Out-of-vocabulary tokens are skipped; with no hits the result is the zero
/// vector with `all_oov` set.
pub fn embed_sentence_mean<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, max_len: usize) -> MeanEmbedding {
    let mut vector = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t.as_ref())).take(max_len.max(1)) {
        axpy(1.0, v, &mut vector);
        hits += 1;
    }
    if hits > 0 {
        let scale = 1.0 / hits as f64;
        vector.iter_mut().for_each(|x| *x *= scale);
    }
    MeanEmbedding { vector, all_oov: hits == 0 }
}

/// Sorted uniform subset of `0..n` of size `min(n, max_items)`.
pub fn subsample_indices(n: usize, max_items: usize, rng: &mut Rng) -> Vec<usize> {
    let max_items = max_items.max(1);
    if n <= max_items {
        return (0..n).collect();
    }
    let mut keep = index::sample(rng, n, max_items).into_vec();
    keep.sort_unstable();
    keep
}

/// Randomly keeps at most `max_items` sentences and `max_items` images,
/// preserving order and re-indexing the gold edges that survive.
pub fn subsample_document(doc: &Document, max_items: usize, rng: &mut Rng) -> Document {
    let sentences = subsample_indices(doc.n(), max_items, rng);
    let images = subsample_indices(doc.m(), max_items, rng);
    let remap = |kept: &[usize], len: usize| {
        let mut map = vec![None; len];
        for (new, &old) in kept.iter().enumerate() {
            map[old] = Some(new);
        }
        map
    };
    let s_map = remap(&sentences, doc.n());
    let v_map = remap(&images, doc.m());
    Document {
        id: doc.id.clone(),
        sentences: sentences.iter().map(|&i| doc.sentences[i].clone()).collect(),
        images: images.iter().map(|&j| doc.images[j].clone()).collect(),
        gold: doc.gold.as_ref().map(|gold| gold.iter().filter_map(|&(s, v)| Some((s_map[s]?, v_map[v]?))).collect()),
    }
}

/// Recipe for a synthetic corpus.
///
/// Every document holds `n_true_pairs` sentence–image pairs built from shared
/// latent vectors `u`: the sentence feature is `normalize(u + e_s)` and the
/// image feature `normalize(A u + e_v)` for one fixed random map `A`, with
/// Gaussian noise of scale `noise_sigma`. Distractor sentences and images get
/// latents of their own. With `topic_count > 0` each document draws its
/// latents around one of `topic_count` shared centroids, scaled by
/// `topic_spread` times a per-document factor in `[0.5, 1.5)`, which makes
/// items inside a document similar to each other.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct GeneratorProfile {
    pub n_docs: usize,
    pub n_true_pairs: usize,
    pub n_distractor_images: usize,
    pub n_distractor_sentences: usize,
    pub latent_dim: usize,
    /// Image feature dimension; `latent_dim` when unset.
    pub image_dim: Option<usize>,
    pub noise_sigma: f64,
    pub topic_count: usize,
    pub topic_spread: f64,
    /// Size of the toy vocabulary. Zero disables sentence tokens, the
    /// embedding table, and image label files.
    pub vocab_size: usize,
    pub tokens_per_sentence: usize,
    pub labels_per_image: usize,
    /// Split sizes; each defaults to 10% of `n_docs`.
    pub dev_docs: Option<usize>,
    pub test_docs: Option<usize>,
    pub seed: u64,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        GeneratorProfile {
            n_docs: 1000,
            n_true_pairs: 5,
            n_distractor_images: 5,
            n_distractor_sentences: 5,
            latent_dim: 64,
            image_dim: None,
            noise_sigma: 0.3,
            topic_count: 0,
            topic_spread: 1.0,
            vocab_size: 0,
            tokens_per_sentence: 8,
            labels_per_image: 5,
            dev_docs: None,
            test_docs: None,
            seed: 0,
        }
    }
}

impl GeneratorProfile {
    /// Five caption pairs plus five caption-less images and five image-less
    /// captions per document; 500/100/100 documents.
    pub fn mscoco_like() -> Self {
        GeneratorProfile { n_docs: 700, dev_docs: Some(100), test_docs: Some(100), ..GeneratorProfile::default() }
    }

    /// [`GeneratorProfile::mscoco_like`] with 50 shared topics.
    pub fn topical_like() -> Self {
        GeneratorProfile { topic_count: 50, ..GeneratorProfile::mscoco_like() }
    }

    /// Five pairs and 45 distractor sentences, no distractor images.
    pub fn dii_stress_like() -> Self {
        GeneratorProfile { n_distractor_images: 0, n_distractor_sentences: 45, ..GeneratorProfile::default() }
    }

    pub fn sentences_per_doc(&self) -> usize {
        self.n_true_pairs + self.n_distractor_sentences
    }

    pub fn images_per_doc(&self) -> usize {
        self.n_true_pairs + self.n_distractor_images
    }

    /// Gold edges over possible edges, identical for every document.
    pub fn density(&self) -> f64 {
        self.n_true_pairs as f64 / (self.sentences_per_doc() * self.images_per_doc()) as f64
    }

    /// `(train, dev, test)` document counts.
    pub fn split_sizes(&self) -> Result<(usize, usize, usize)> {
        let tenth = libm::round(self.n_docs as f64 * 0.1) as usize;
        let dev = self.dev_docs.unwrap_or(tenth);
        let test = self.test_docs.unwrap_or(tenth);
        match self.n_docs.checked_sub(dev + test) {
            Some(train) if train > 0 => Ok((train, dev, test)),
            _ => Err(Error::InvalidConfig(format!(
                "{} documents cannot hold {dev} dev + {test} test and a non-empty train split",
                self.n_docs
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_docs == 0 {
            return Err(Error::InvalidConfig("n_docs must be positive".into()));
        }
        if self.n_true_pairs == 0 {
            return Err(Error::InvalidConfig("n_true_pairs must be at least 1".into()));
        }
        if self.latent_dim == 0 || self.image_dim == Some(0) {
            return Err(Error::InvalidConfig("latent and image dimensions must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise_sigma must be finite and >= 0".into()));
        }
        if !(self.topic_spread >= 0.0 && self.topic_spread.is_finite()) {
            return Err(Error::InvalidConfig("topic_spread must be finite and >= 0".into()));
        }
        if self.vocab_size > 0 && (self.tokens_per_sentence == 0 || self.labels_per_image == 0) {
            return Err(Error::InvalidConfig("token and label counts must be positive with a vocabulary".into()));
        }
        self.split_sizes().map(|_| ())
    }
}

/// Output of [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    /// Toy object-detector labels, present when the profile has a vocabulary.
    pub labels: Option<LabelFile>,
}

const STREAM_WORLD: u64 = 0;
const STREAM_DOCS: u64 = 1;

struct World {
    image_map: Mat,
    topics: Vec<Vec<f64>>,
    words: Vec<Vec<f64>>,
}

fn gaussian_vec(rng: &mut Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng::standard_normal(rng)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let len = norm(&v);
    if len > 0.0 {
        v.iter_mut().for_each(|x| *x /= len);
    }
    v
}

fn add_noise(rng: &mut Rng, v: &[f64], sigma: f64) -> Vec<f64> {
    v.iter().map(|&x| x + sigma * rng::standard_normal(rng)).collect()
}

/// Indices of the `count` highest-scoring words for `query`, best first.
fn nearest_words(words: &[Vec<f64>], query: &[f64], count: usize) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> =
        words.iter().enumerate().map(|(w, e)| (w, dot(query, e) / norm(e).max(1e-300))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(count);
    scored
}

fn word_name(w: usize) -> String {
    format!("w{w:04}")
}

/// Builds train/dev/test corpora from `profile`. Identical profiles give
/// identical output.
pub fn generate_synthetic(profile: &GeneratorProfile) -> Result<SyntheticCorpus> {
    profile.validate()?;
    let latent = profile.latent_dim;
    let image_dim = profile.image_dim.unwrap_or(latent);
    let sigma = profile.noise_sigma;

    let mut world_rng = rng::stream(profile.seed, STREAM_WORLD);
    let scale = 1.0 / libm::sqrt(latent as f64);
    let world = World {
        image_map: Mat::from_fn(image_dim, latent, |_, _| scale * rng::standard_normal(&mut world_rng)),
        topics: (0..profile.topic_count).map(|_| gaussian_vec(&mut world_rng, latent, 1.0)).collect(),
        words: (0..profile.vocab_size).map(|_| gaussian_vec(&mut world_rng, latent, 1.0)).collect(),
    };

    let mut sentence_table = FeatureTable::new(latent)?;
    let mut image_table = FeatureTable::new(image_dim)?;
    let mut labels = LabelFile::default();
    let mut documents = Vec::with_capacity(profile.n_docs);
    let mut rng = rng::stream(profile.seed, STREAM_DOCS);
    let width = format!("{}", profile.n_docs.saturating_sub(1)).len();

    for d in 0..profile.n_docs {
        let doc_id = format!("doc{d:0width$}");
        let topic = if world.topics.is_empty() {
            None
        } else {
            let t = rng.random_range(0..world.topics.len());
            Some((t, profile.topic_spread * rng.random_range(0.5..1.5)))
        };
        let draw_latent = |rng: &mut Rng| -> Vec<f64> {
            match topic {
                None => gaussian_vec(rng, latent, 1.0),
                Some((t, spread)) => {
                    let mut u = gaussian_vec(rng, latent, spread);
                    axpy(1.0, &world.topics[t], &mut u);
                    u
                }
            }
        };

        // Pair latents first, then distractors; positions are shuffled below.
        let n = profile.sentences_per_doc();
        let m = profile.images_per_doc();
        let g = profile.n_true_pairs;
        let pair_latents: Vec<Vec<f64>> = (0..g).map(|_| draw_latent(&mut rng)).collect();
        let sentence_latents: Vec<Vec<f64>> = pair_latents
            .iter()
            .cloned()
            .chain((0..profile.n_distractor_sentences).map(|_| draw_latent(&mut rng)))
            .collect();
        let image_latents: Vec<Vec<f64>> = pair_latents
            .iter()
            .cloned()
            .chain((0..profile.n_distractor_images).map(|_| draw_latent(&mut rng)))
            .collect();

        let mut sentence_order: Vec<usize> = (0..n).collect();
        sentence_order.shuffle(&mut rng);
        let mut image_order: Vec<usize> = (0..m).collect();
        image_order.shuffle(&mut rng);

        let mut sentences = Vec::with_capacity(n);
        for (pos, &src) in sentence_order.iter().enumerate() {
            let id = format!("{doc_id}.s{pos}");
            let noisy = add_noise(&mut rng, &sentence_latents[src], sigma);
            let tokens = (!world.words.is_empty()).then(|| {
                nearest_words(&world.words, &noisy, profile.tokens_per_sentence)
                    .into_iter()
                    .map(|(w, _)| word_name(w))
                    .collect()
            });
            sentence_table.insert(id.clone(), &normalized(noisy))?;
            sentences.push(SentenceItem { id: id.clone(), tokens, feat: Some(id) });
        }

        let mut images = Vec::with_capacity(m);
        for (pos, &src) in image_order.iter().enumerate() {
            let id = format!("{doc_id}.v{pos}");
            let u = &image_latents[src];
            let projected: Vec<f64> = world.image_map.row_iter().map(|row| dot(row, u)).collect();
            image_table.insert(id.clone(), &normalized(add_noise(&mut rng, &projected, sigma)))?;
            if !world.words.is_empty() {
                let seen = add_noise(&mut rng, u, sigma);
                let top = nearest_words(&world.words, &seen, profile.labels_per_image);
                let peak = top[0].1;
                let weights: Vec<f64> = top.iter().map(|&(_, s)| libm::exp(s - peak)).collect();
                let total: f64 = weights.iter().sum();
                let entry = top.iter().zip(&weights).map(|(&(w, _), &p)| (word_name(w), p / total)).collect();
                labels.insert(id.clone(), entry)?;
            }
            images.push(ImageItem { id: id.clone(), feat: id });
        }

        let mut sentence_pos = vec![0; n];
        for (pos, &src) in sentence_order.iter().enumerate() {
            sentence_pos[src] = pos;
        }
        let mut image_pos = vec![0; m];
        for (pos, &src) in image_order.iter().enumerate() {
            image_pos[src] = pos;
        }
        let mut gold: Vec<(usize, usize)> = (0..g).map(|p| (sentence_pos[p], image_pos[p])).collect();
        gold.sort_unstable();

        documents.push(Document { id: doc_id, sentences, images, gold: Some(gold) });
    }

    let embeddings = if world.words.is_empty() {
        None
    } else {
        let mut table = EmbeddingTable::new(latent)?;
        for (w, e) in world.words.iter().enumerate() {
            table.insert(word_name(w), e)?;
        }
        Some(Arc::new(table))
    };
    let sentence_table = Arc::new(sentence_table);
    let image_table = Arc::new(image_table);
    let (n_train, n_dev, _) = profile.split_sizes()?;
    let test_docs = documents.split_off(n_train + n_dev);
    let dev_docs = documents.split_off(n_train);
    let make = |docs, split| Corpus::new(docs, split, sentence_table.clone(), image_table.clone(), embeddings.clone());
    Ok(SyntheticCorpus {
        train: make(documents, Split::Train)?,
        dev: make(dev_docs, Split::Dev)?,
        test: make(test_docs, Split::Test)?,
        labels: (!world.words.is_empty()).then_some(labels),
    })
}
