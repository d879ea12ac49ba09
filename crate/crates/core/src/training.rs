//! Document-level max-margin training.
//!
//! For a document `(S, V)` with `b` negative image sets `V'` and `b` negative
//! sentence sets `S'` drawn from other documents, the loss is
//!
//! ```text
//! L = max_{V'} h(sim(S, V), sim(S, V')) + max_{S'} h(sim(S, V), sim(S', V))
//! h(p, n) = max(0, margin - p + n)
//! ```
//!
//! with the maxima replaced by means when hard negatives are off. Parameters
//! are updated with Adam once per document (or per `batch_size` documents),
//! the learning rate is divided on dev-loss plateaus, and the checkpoint with
//! the lowest dev loss is kept.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corpus::{subsample_indices, Corpus, DocInputs, TextEncoder};
use crate::encoders::{backward_into, encode, init_params, EncoderParams, ForwardCache, Gradients, Side};
use crate::eval::{doc_auc, predict_matrix};
use crate::linalg::dot;
use crate::rng::{self, Rng};
use crate::simfn::{KPolicy, SimFn, SimKind, SimValue};
use crate::{Error, Mat, Result};

/// Structured set similarity, or the NoStruct baseline that scores a set pair
/// by the cosine of one random sentence and one random image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum TrainMode {
    #[default]
    Structured,
    Nostruct,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub simfn: SimKind,
    pub k_policy: Option<KPolicy>,
    pub mode: TrainMode,
    /// Negative sets per side.
    #[cfg_attr(feature = "serde", serde(rename = "b"))]
    pub negatives: usize,
    pub margin: f64,
    #[cfg_attr(feature = "serde", serde(rename = "hard_neg"))]
    pub hard_negatives: bool,
    pub lr: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub d_multi: usize,
    pub plateau_patience: usize,
    pub decay_factor: f64,
    pub min_delta: f64,
    pub max_tokens: usize,
    pub max_items_per_doc: Option<usize>,
    /// Documents per Adam step; gradients are averaged over the batch.
    pub batch_size: usize,
    pub seed: u64,
    pub text_encoder: TextEncoder,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            simfn: SimKind::Ap,
            k_policy: None,
            mode: TrainMode::Structured,
            negatives: 10,
            margin: 0.2,
            hard_negatives: true,
            lr: 1e-4,
            epochs: 50,
            dropout: 0.4,
            d_multi: 1024,
            plateau_patience: 3,
            decay_factor: 5.0,
            min_delta: 1e-4,
            max_tokens: 20,
            max_items_per_doc: None,
            batch_size: 1,
            seed: 0,
            text_encoder: TextEncoder::Feat,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must be in [0, 1)");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return fail("margin must be positive");
        }
        if self.negatives == 0 {
            return fail("b must be at least 1");
        }
        if !(self.decay_factor > 1.0 && self.decay_factor.is_finite()) {
            return fail("decay_factor must exceed 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if !(self.min_delta >= 0.0) {
            return fail("min_delta must be non-negative");
        }
        if self.d_multi == 0 || self.batch_size == 0 || self.max_tokens == 0 || self.max_items_per_doc == Some(0) {
            return fail("d_multi, batch_size, max_tokens and max_items_per_doc must be positive");
        }
        self.similarity().map(|_| ())
    }

    pub fn similarity(&self) -> Result<SimFn> {
        SimFn::new(self.simfn, self.k_policy)
    }
}

pub fn hinge(positive: f64, negative: f64, margin: f64) -> f64 {
    (margin - positive + negative).max(0.0)
}

/// Indices of the documents supplying the negative sets of one positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSample {
    pub image_docs: Vec<usize>,
    pub sentence_docs: Vec<usize>,
}

/// Draws `b` image sets and, independently, `b` sentence sets uniformly
/// without replacement from the documents other than `doc`.
pub fn sample_negatives(n_docs: usize, doc: usize, b: usize, rng: &mut Rng) -> Result<NegativeSample> {
    if n_docs < b + 1 {
        return Err(Error::CorpusTooSmall { needed: b + 1, available: n_docs });
    }
    let draw = |rng: &mut Rng| -> Vec<usize> {
        index::sample(rng, n_docs - 1, b).into_iter().map(|i| if i >= doc { i + 1 } else { i }).collect()
    };
    let image_docs = draw(rng);
    let sentence_docs = draw(rng);
    Ok(NegativeSample { image_docs, sentence_docs })
}

/// Loss of one document and its gradient with respect to all parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DocLoss {
    pub loss: f64,
    pub grads: Gradients,
}

enum Scorer<'a> {
    Structured(SimFn),
    Nostruct(&'a mut Rng),
}

impl Scorer<'_> {
    fn score(&mut self, sims: &Mat) -> Result<SimValue> {
        match self {
            Scorer::Structured(f) => f.evaluate(sims),
            Scorer::Nostruct(rng) => {
                let (i, j) = (rng.random_range(0..sims.rows()), rng.random_range(0..sims.cols()));
                let mut grad = Mat::zeros(sims.rows(), sims.cols());
                grad[(i, j)] = 1.0;
                Ok(SimValue { value: sims[(i, j)], grad })
            }
        }
    }
}

/// Per-term weights of the hinge aggregation: one-hot at the most violating
/// active term for hard negatives, `1/b` at every active term otherwise.
fn hinge_weights(hinges: &[f64], hard: bool) -> Vec<f64> {
    let mut weights = vec![0.0; hinges.len()];
    if hard {
        let mut best = 0;
        for (k, &h) in hinges.iter().enumerate() {
            if h > hinges[best] {
                best = k;
            }
        }
        if hinges[best] > 0.0 {
            weights[best] = 1.0;
        }
    } else {
        let share = 1.0 / hinges.len() as f64;
        for (w, &h) in weights.iter_mut().zip(hinges) {
            if h > 0.0 {
                *w = share;
            }
        }
    }
    weights
}

/// `grad_a = G B`, `grad_b = G^T A` for `M = A B^T`, accumulated.
fn matrix_product_backward(g: &Mat, a: &Mat, b: &Mat, grad_a: &mut Mat, grad_b: &mut Mat) {
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let w = g[(i, j)];
            if w != 0.0 {
                crate::linalg::axpy(w, b.row(j), grad_a.row_mut(i));
                crate::linalg::axpy(w, a.row(i), grad_b.row_mut(j));
            }
        }
    }
}

fn sims(sentences: &Mat, images: &Mat) -> Mat {
    Mat::from_fn(sentences.rows(), images.rows(), |i, j| dot(sentences.row(i), images.row(j)))
}

struct Encoded {
    out: Mat,
    cache: ForwardCache,
}

fn run_encoder(
    inputs: &Mat,
    side: Side,
    params: &EncoderParams,
    config: &TrainConfig,
    train: bool,
    rng: &mut Rng,
) -> Result<Encoded> {
    let (out, cache) = encode(inputs, side, params, config.dropout, train, rng)?;
    Ok(Encoded { out, cache })
}

/// Shared body of [`doc_loss`] and [`nostruct_loss`].
#[allow(clippy::too_many_arguments)]
fn margin_loss(
    positive: &DocInputs,
    image_negatives: &[&DocInputs],
    sentence_negatives: &[&DocInputs],
    params: &EncoderParams,
    config: &TrainConfig,
    scorer: &mut Scorer<'_>,
    train: bool,
    rng: &mut Rng,
    want_grads: bool,
) -> Result<DocLoss> {
    if image_negatives.is_empty() || sentence_negatives.is_empty() {
        return Err(Error::Empty("negative sample"));
    }
    let s = run_encoder(&positive.sentences, Side::Sentence, params, config, train, rng)?;
    let v = run_encoder(&positive.images, Side::Image, params, config, train, rng)?;
    let image_negs = image_negatives
        .iter()
        .map(|d| run_encoder(&d.images, Side::Image, params, config, train, rng))
        .collect::<Result<Vec<_>>>()?;
    let sentence_negs = sentence_negatives
        .iter()
        .map(|d| run_encoder(&d.sentences, Side::Sentence, params, config, train, rng))
        .collect::<Result<Vec<_>>>()?;

    let pos = scorer.score(&sims(&s.out, &v.out))?;
    let image_scores =
        image_negs.iter().map(|neg| scorer.score(&sims(&s.out, &neg.out))).collect::<Result<Vec<_>>>()?;
    let sentence_scores =
        sentence_negs.iter().map(|neg| scorer.score(&sims(&neg.out, &v.out))).collect::<Result<Vec<_>>>()?;

    let image_hinges: Vec<f64> = image_scores.iter().map(|n| hinge(pos.value, n.value, config.margin)).collect();
    let sentence_hinges: Vec<f64> = sentence_scores.iter().map(|n| hinge(pos.value, n.value, config.margin)).collect();
    let image_w = hinge_weights(&image_hinges, config.hard_negatives);
    let sentence_w = hinge_weights(&sentence_hinges, config.hard_negatives);
    let loss = dot(&image_w, &image_hinges) + dot(&sentence_w, &sentence_hinges);
    let loss = if config.hard_negatives {
        // One-hot weights pick the maximum exactly, including a zero maximum.
        image_hinges.iter().copied().fold(0.0, f64::max) + sentence_hinges.iter().copied().fold(0.0, f64::max)
    } else {
        loss
    };

    let mut grads = params.zeros_like();
    if !want_grads || loss == 0.0 {
        return Ok(DocLoss { loss, grads });
    }

    let d = params.d_multi;
    let mut grad_s = Mat::zeros(s.out.rows(), d);
    let mut grad_v = Mat::zeros(v.out.rows(), d);
    let pos_weight = -(image_w.iter().sum::<f64>() + sentence_w.iter().sum::<f64>());
    if pos_weight != 0.0 {
        let mut g = pos.grad.clone();
        g.as_mut_slice().iter_mut().for_each(|x| *x *= pos_weight);
        matrix_product_backward(&g, &s.out, &v.out, &mut grad_s, &mut grad_v);
    }
    for ((neg, score), &w) in image_negs.iter().zip(&image_scores).zip(&image_w) {
        if w == 0.0 {
            continue;
        }
        let mut g = score.grad.clone();
        g.as_mut_slice().iter_mut().for_each(|x| *x *= w);
        let mut grad_neg = Mat::zeros(neg.out.rows(), d);
        matrix_product_backward(&g, &s.out, &neg.out, &mut grad_s, &mut grad_neg);
        backward_into(&neg.cache, params, &grad_neg, &mut grads)?;
    }
    for ((neg, score), &w) in sentence_negs.iter().zip(&sentence_scores).zip(&sentence_w) {
        if w == 0.0 {
            continue;
        }
        let mut g = score.grad.clone();
        g.as_mut_slice().iter_mut().for_each(|x| *x *= w);
        let mut grad_neg = Mat::zeros(neg.out.rows(), d);
        matrix_product_backward(&g, &neg.out, &v.out, &mut grad_neg, &mut grad_v);
        backward_into(&neg.cache, params, &grad_neg, &mut grads)?;
    }
    backward_into(&s.cache, params, &grad_s, &mut grads)?;
    backward_into(&v.cache, params, &grad_v, &mut grads)?;
    Ok(DocLoss { loss, grads })
}

/// Max-margin loss of one document under the configured set similarity.
///
/// `rng` drives dropout only; with the same generator state the same masks
/// are drawn.
pub fn doc_loss(
    positive: &DocInputs,
    image_negatives: &[&DocInputs],
    sentence_negatives: &[&DocInputs],
    params: &EncoderParams,
    config: &TrainConfig,
    train: bool,
    rng: &mut Rng,
) -> Result<DocLoss> {
    let mut scorer = Scorer::Structured(config.similarity()?);
    margin_loss(positive, image_negatives, sentence_negatives, params, config, &mut scorer, train, rng, true)
}

/// Max-margin loss where every set similarity is the cosine of one uniformly
/// drawn sentence and one uniformly drawn image. `pair_rng` picks the pairs,
/// `rng` drives dropout.
#[allow(clippy::too_many_arguments)]
pub fn nostruct_loss(
    positive: &DocInputs,
    image_negatives: &[&DocInputs],
    sentence_negatives: &[&DocInputs],
    params: &EncoderParams,
    config: &TrainConfig,
    train: bool,
    pair_rng: &mut Rng,
    rng: &mut Rng,
) -> Result<DocLoss> {
    let mut scorer = Scorer::Nostruct(pair_rng);
    margin_loss(positive, image_negatives, sentence_negatives, params, config, &mut scorer, train, rng, true)
}

/// Adam moments for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &EncoderParams) -> Self {
        AdamState {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradients before
/// touching any state.
pub fn adam_step(params: &mut EncoderParams, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.first) {
        return Err(Error::DimensionMismatch { expected: params.num_values(), found: grads.num_values() });
    }
    for (name, g) in EncoderParams::TENSOR_NAMES.iter().zip(grads.tensors()) {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient(name));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - libm::pow(b1, t);
    let c2 = 1.0 - libm::pow(b2, t);
    let tensors = params.tensors_mut();
    let firsts = state.first.tensors_mut();
    let seconds = state.second.tensors_mut();
    for (((p, g), m), v) in tensors.into_iter().zip(grads.tensors()).zip(firsts).zip(seconds) {
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
    Ok(())
}

/// Divides the learning rate when the dev loss stops improving.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauState {
    pub lr: f64,
    pub best: f64,
    pub stale_epochs: usize,
}

impl PlateauState {
    pub fn new(lr: f64) -> Self {
        PlateauState { lr, best: f64::INFINITY, stale_epochs: 0 }
    }

    /// Records one epoch's dev loss and returns the learning rate for the
    /// next epoch. An epoch improves when it beats the best loss by more than
    /// `min_delta`; after more than `patience` consecutive stale epochs the
    /// rate is divided by `decay` and the count restarts.
    pub fn observe(&mut self, dev_loss: f64, patience: usize, decay: f64, min_delta: f64) -> f64 {
        if dev_loss < self.best - min_delta {
            self.best = dev_loss;
            self.stale_epochs = 0;
        } else {
            self.stale_epochs += 1;
            if self.stale_epochs > patience {
                self.lr /= decay;
                self.stale_epochs = 0;
            }
        }
        self.lr
    }
}

/// Learning rate after replaying a dev-loss history through the plateau rule.
pub fn plateau_schedule(history: &[f64], config: &TrainConfig) -> f64 {
    let mut state = PlateauState::new(config.lr);
    for &loss in history {
        state.observe(loss, config.plateau_patience, config.decay_factor, config.min_delta);
    }
    state.lr
}

/// Parameters selected by dev loss, with the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: EncoderParams,
    /// Epoch the parameters come from; 0 for the initialization.
    pub epoch: usize,
    /// Dev loss of the parameters; `None` when no epoch ran.
    pub dev_loss: Option<f64>,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_auc: Option<f64>,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

const STREAM_INIT: u64 = 10;
const STREAM_TRAIN: u64 = 11;
const STREAM_DEV: u64 = 12;

/// Applies the per-document item cap, if any.
fn capped_view<'a>(
    inputs: &'a DocInputs,
    max_items: Option<usize>,
    rng: &mut Rng,
) -> alloc::borrow::Cow<'a, DocInputs> {
    use alloc::borrow::Cow;
    match max_items {
        Some(cap) if inputs.sentences.rows() > cap || inputs.images.rows() > cap => {
            let s = subsample_indices(inputs.sentences.rows(), cap, rng);
            let v = subsample_indices(inputs.images.rows(), cap, rng);
            Cow::Owned(DocInputs { sentences: inputs.sentences.select_rows(&s), images: inputs.images.select_rows(&v) })
        }
        _ => Cow::Borrowed(inputs),
    }
}

/// Loss of document `doc` against a fresh negative sample from `inputs`.
fn sampled_loss(
    inputs: &[DocInputs],
    doc: usize,
    params: &EncoderParams,
    config: &TrainConfig,
    train: bool,
    rng: &mut Rng,
    want_grads: bool,
) -> Result<DocLoss> {
    let negs = sample_negatives(inputs.len(), doc, config.negatives, rng)?;
    let positive = capped_view(&inputs[doc], config.max_items_per_doc, rng);
    let image_views: Vec<_> =
        negs.image_docs.iter().map(|&k| capped_view(&inputs[k], config.max_items_per_doc, rng)).collect();
    let sentence_views: Vec<_> =
        negs.sentence_docs.iter().map(|&k| capped_view(&inputs[k], config.max_items_per_doc, rng)).collect();
    let image_refs: Vec<&DocInputs> = image_views.iter().map(|c| c.as_ref()).collect();
    let sentence_refs: Vec<&DocInputs> = sentence_views.iter().map(|c| c.as_ref()).collect();
    match config.mode {
        TrainMode::Structured => {
            let mut scorer = Scorer::Structured(config.similarity()?);
            margin_loss(&positive, &image_refs, &sentence_refs, params, config, &mut scorer, train, rng, want_grads)
        }
        TrainMode::Nostruct => {
            let mut pair_rng = rng::seeded(rng.random());
            let mut scorer = Scorer::Nostruct(&mut pair_rng);
            margin_loss(&positive, &image_refs, &sentence_refs, params, config, &mut scorer, train, rng, want_grads)
        }
    }
}

/// Mean eval-mode loss over a split, with negatives drawn from that split by
/// a generator fixed by the config seed, so repeated calls agree exactly.
pub fn dev_loss(inputs: &[DocInputs], params: &EncoderParams, config: &TrainConfig) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::CorpusTooSmall { needed: config.negatives + 1, available: 0 });
    }
    let mut rng = rng::stream(config.seed, STREAM_DEV);
    let mut total = 0.0;
    for doc in 0..inputs.len() {
        total += sampled_loss(inputs, doc, params, config, false, &mut rng, false)?.loss;
    }
    Ok(total / inputs.len() as f64)
}

/// Macro AUC over the documents of `corpus` that can be scored.
fn macro_auc(corpus: &Corpus, inputs: &[DocInputs], params: &EncoderParams) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (doc, input) in corpus.documents.iter().zip(inputs) {
        if doc.gold_edges().is_empty() {
            continue;
        }
        match doc_auc(&predict_matrix(input, params)?, doc.gold_edges()) {
            Ok(auc) => {
                sum += auc;
                count += 1;
            }
            Err(Error::Skip(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Trains encoders on `train` and returns the lowest-dev-loss checkpoint.
pub fn train(train: &Corpus, dev: &Corpus, config: &TrainConfig) -> Result<(Checkpoint, TrainLog)> {
    train_with_progress(train, dev, config, |_| {})
}

/// [`train`], calling `progress` after every epoch.
pub fn train_with_progress(
    train: &Corpus,
    dev: &Corpus,
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochLog),
) -> Result<(Checkpoint, TrainLog)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("train split"));
    }
    if train.len() < config.negatives + 1 {
        return Err(Error::CorpusTooSmall { needed: config.negatives + 1, available: train.len() });
    }
    if config.epochs > 0 && dev.len() < config.negatives + 1 {
        return Err(Error::CorpusTooSmall { needed: config.negatives + 1, available: dev.len() });
    }
    let sentence_dim = train.sentence_dim(config.text_encoder)?;
    if dev.sentence_dim(config.text_encoder)? != sentence_dim || dev.image_dim() != train.image_dim() {
        return Err(Error::InvalidConfig("train and dev feature dimensions differ".into()));
    }
    let train_inputs = train.inputs(config.text_encoder, config.max_tokens)?;
    let dev_inputs = dev.inputs(config.text_encoder, config.max_tokens)?;

    let mut params =
        init_params(sentence_dim, train.image_dim(), config.d_multi, &mut rng::stream(config.seed, STREAM_INIT))?;
    let mut best = Checkpoint { params: params.clone(), epoch: 0, dev_loss: None, config: config.clone() };
    let mut log = TrainLog::default();
    let mut adam = AdamState::new(&params);
    let mut plateau = PlateauState::new(config.lr);
    let mut rng = rng::stream(config.seed, STREAM_TRAIN);
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();
    let mut batch_grads = params.zeros_like();

    for epoch in 1..=config.epochs {
        let lr = plateau.lr;
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            batch_grads.scale(0.0);
            for &doc in batch {
                let out = sampled_loss(&train_inputs, doc, &params, config, true, &mut rng, true)?;
                loss_sum += out.loss;
                batch_grads.add_scaled(1.0 / batch.len() as f64, &out.grads);
            }
            adam_step(&mut params, &batch_grads, &mut adam, lr)?;
        }
        let dev_value = dev_loss(&dev_inputs, &params, config)?;
        if !dev_value.is_finite() {
            return Err(Error::NonFinite("dev loss"));
        }
        let row = EpochLog {
            epoch,
            train_loss: loss_sum / train_inputs.len() as f64,
            dev_loss: dev_value,
            dev_auc: macro_auc(dev, &dev_inputs, &params)?,
            lr,
        };
        progress(&row);
        log.epochs.push(row);
        if best.dev_loss.is_none_or(|b| dev_value < b) {
            best = Checkpoint { params: params.clone(), epoch, dev_loss: Some(dev_value), config: config.clone() };
        }
        plateau.observe(dev_value, config.plateau_patience, config.decay_factor, config.min_delta);
    }
    Ok((best, log))
}
