//! Affine projections into the shared embedding space, followed by L2
//! normalization, with hand-written backward passes.
//!
//! Each side (sentences, images) maps a raw input row `x` to
//! `normalize(W^T drop(x) + b)`. Dropout is inverted dropout on the input
//! vector and only runs in training mode.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::linalg::{axpy, dot, norm};
use crate::rng::Rng;
use crate::{Error, Mat, Result};

/// Inputs whose projection is shorter than this cannot be normalized.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Sentence,
    Image,
}

/// `W` is `input_dim x d_multi`, `b` has length `d_multi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl Projection {
    pub fn zeros(input_dim: usize, d_multi: usize) -> Self {
        Projection { weight: Mat::zeros(input_dim, d_multi), bias: vec![0.0; d_multi] }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Parameters of both encoders. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub d_multi: usize,
    pub sentence: Projection,
    pub image: Projection,
}

/// Gradients with respect to [`EncoderParams`], same shapes.
pub type Gradients = EncoderParams;

impl EncoderParams {
    pub fn zeros(sentence_dim: usize, image_dim: usize, d_multi: usize) -> Self {
        EncoderParams {
            d_multi,
            sentence: Projection::zeros(sentence_dim, d_multi),
            image: Projection::zeros(image_dim, d_multi),
        }
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams::zeros(self.sentence_dim(), self.image_dim(), self.d_multi)
    }

    pub fn sentence_dim(&self) -> usize {
        self.sentence.input_dim()
    }

    pub fn image_dim(&self) -> usize {
        self.image.input_dim()
    }

    pub fn projection(&self, side: Side) -> &Projection {
        match side {
            Side::Sentence => &self.sentence,
            Side::Image => &self.image,
        }
    }

    pub fn projection_mut(&mut self, side: Side) -> &mut Projection {
        match side {
            Side::Sentence => &mut self.sentence,
            Side::Image => &mut self.image,
        }
    }

    /// `W_s, b_s, W_v, b_v` as flat slices.
    pub fn tensors(&self) -> [&[f64]; 4] {
        [self.sentence.weight.as_slice(), &self.sentence.bias, self.image.weight.as_slice(), &self.image.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.sentence.weight.as_mut_slice(),
            &mut self.sentence.bias,
            self.image.weight.as_mut_slice(),
            &mut self.image.bias,
        ]
    }

    pub const TENSOR_NAMES: [&'static str; 4] = ["W_s", "b_s", "W_v", "b_v"];

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.d_multi == other.d_multi
            && self.sentence.weight.shape() == other.sentence.weight.shape()
            && self.image.weight.shape() == other.image.weight.shape()
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(alpha, src, dst);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0))
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(sentence_dim: usize, image_dim: usize, d_multi: usize, rng: &mut Rng) -> Result<EncoderParams> {
    if sentence_dim == 0 || image_dim == 0 || d_multi == 0 {
        return Err(Error::Empty("encoder dimension"));
    }
    let mut params = EncoderParams::zeros(sentence_dim, image_dim, d_multi);
    for side in [Side::Sentence, Side::Image] {
        let proj = params.projection_mut(side);
        let fan_in = proj.input_dim();
        let limit = libm::sqrt(6.0 / (fan_in + d_multi) as f64);
        proj.weight.as_mut_slice().iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
    }
    Ok(params)
}

/// Unit vector along `v` and the norm of `v`.
pub fn l2_normalize(v: &[f64]) -> Result<(Vec<f64>, f64)> {
    let len = norm(v);
    if !(len > MIN_NORM) {
        return Err(Error::ZeroNorm(len));
    }
    Ok((v.iter().map(|x| x / len).collect(), len))
}

/// Pulls `upstream` (gradient w.r.t. the unit output) back to the input:
/// `(I - u u^T) upstream / |v|`.
pub fn l2_normalize_backward(unit: &[f64], len: f64, upstream: &[f64]) -> Vec<f64> {
    let along = dot(unit, upstream);
    unit.iter().zip(upstream).map(|(&u, &g)| (g - u * along) / len).collect()
}

/// Everything the backward pass needs from one [`encode`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub side: Side,
    /// Inputs after dropout, one row per item.
    pub dropped: Mat,
    /// Per-entry dropout scale (0 or `1/keep`); `None` when dropout was off.
    pub mask: Option<Mat>,
    pub outputs: Mat,
    pub norms: Vec<f64>,
}

/// Projects and normalizes every row of `inputs`.
pub fn encode(
    inputs: &Mat,
    side: Side,
    params: &EncoderParams,
    dropout: f64,
    train_mode: bool,
    rng: &mut Rng,
) -> Result<(Mat, ForwardCache)> {
    let proj = params.projection(side);
    if inputs.cols() != proj.input_dim() {
        return Err(Error::DimensionMismatch { expected: proj.input_dim(), found: inputs.cols() });
    }
    let mut dropped = inputs.clone();
    let mask = if train_mode && dropout > 0.0 {
        let keep = 1.0 - dropout;
        let scale = 1.0 / keep;
        let mut mask = Mat::zeros(inputs.rows(), inputs.cols());
        for (m, x) in mask.as_mut_slice().iter_mut().zip(dropped.as_mut_slice()) {
            *m = if rng.random::<f64>() < keep { scale } else { 0.0 };
            *x *= *m;
        }
        Some(mask)
    } else {
        None
    };

    let d = params.d_multi;
    let mut outputs = Mat::zeros(inputs.rows(), d);
    let mut norms = Vec::with_capacity(inputs.rows());
    for i in 0..inputs.rows() {
        let out = outputs.row_mut(i);
        out.copy_from_slice(&proj.bias);
        for (k, &x) in dropped.row(i).iter().enumerate() {
            if x != 0.0 {
                axpy(x, proj.weight.row(k), out);
            }
        }
        let len = norm(out);
        if !(len > MIN_NORM) {
            return Err(Error::ZeroNorm(len));
        }
        out.iter_mut().for_each(|v| *v /= len);
        norms.push(len);
    }
    let cache = ForwardCache { side, dropped, mask, outputs: outputs.clone(), norms };
    Ok((outputs, cache))
}

/// Eval-mode [`encode`] without a cache.
pub fn encode_eval(inputs: &Mat, side: Side, params: &EncoderParams) -> Result<Mat> {
    // Eval mode draws nothing from the generator.
    let mut unused = crate::rng::seeded(0);
    encode(inputs, side, params, 0.0, false, &mut unused).map(|(out, _)| out)
}

fn check_upstream(cache: &ForwardCache, params: &EncoderParams, upstream: &Mat) -> Result<()> {
    if upstream.shape() != cache.outputs.shape() {
        return Err(Error::CacheMismatch("upstream gradient shape"));
    }
    if cache.dropped.cols() != params.projection(cache.side).input_dim() || cache.outputs.cols() != params.d_multi {
        return Err(Error::CacheMismatch("parameter shapes"));
    }
    Ok(())
}

/// Gradient w.r.t. the pre-normalization activation of row `i`.
fn pre_norm_grad(cache: &ForwardCache, i: usize, upstream: &[f64]) -> Vec<f64> {
    l2_normalize_backward(cache.outputs.row(i), cache.norms[i], upstream)
}

/// Accumulates the parameter gradients of one encode call into `grads`.
pub fn backward_into(
    cache: &ForwardCache,
    params: &EncoderParams,
    upstream: &Mat,
    grads: &mut Gradients,
) -> Result<()> {
    check_upstream(cache, params, upstream)?;
    if !grads.same_shape(params) {
        return Err(Error::CacheMismatch("gradient buffer shape"));
    }
    let target = grads.projection_mut(cache.side);
    for i in 0..upstream.rows() {
        let g = upstream.row(i);
        if g.iter().all(|&x| x == 0.0) {
            continue;
        }
        let dz = pre_norm_grad(cache, i, g);
        axpy(1.0, &dz, &mut target.bias);
        for (k, &x) in cache.dropped.row(i).iter().enumerate() {
            if x != 0.0 {
                axpy(x, &dz, target.weight.row_mut(k));
            }
        }
    }
    Ok(())
}

/// Parameter gradients of one encode call, for its side only.
pub fn backward(cache: &ForwardCache, params: &EncoderParams, upstream: &Mat) -> Result<Projection> {
    let mut grads = params.zeros_like();
    backward_into(cache, params, upstream, &mut grads)?;
    Ok(match cache.side {
        Side::Sentence => grads.sentence,
        Side::Image => grads.image,
    })
}

/// Gradient w.r.t. the raw (pre-dropout) inputs.
pub fn input_gradient(cache: &ForwardCache, params: &EncoderParams, upstream: &Mat) -> Result<Mat> {
    check_upstream(cache, params, upstream)?;
    let proj = params.projection(cache.side);
    let mut out = Mat::zeros(cache.dropped.rows(), cache.dropped.cols());
    for i in 0..upstream.rows() {
        let dz = pre_norm_grad(cache, i, upstream.row(i));
        let row = out.row_mut(i);
        for (k, dx) in row.iter_mut().enumerate() {
            *dx = dot(proj.weight.row(k), &dz);
        }
        if let Some(mask) = &cache.mask {
            row.iter_mut().zip(mask.row(i)).for_each(|(dx, m)| *dx *= m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn random_mat(rng: &mut Rng, n: usize, m: usize) -> Mat {
        Mat::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn init_is_seeded_glorot() {
        let a = init_params(5, 7, 9, &mut seeded(1)).unwrap();
        let b = init_params(5, 7, 9, &mut seeded(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.sentence.bias.iter().all(|&x| x == 0.0));
        assert!(a.image.bias.iter().all(|&x| x == 0.0));
        assert!(init_params(0, 1, 1, &mut seeded(1)).is_err());
    }

    #[test]
    fn init_variance_matches_glorot() {
        // Uniform(-l, l) has variance l^2 / 3 = 2 / (fan_in + fan_out).
        let p = init_params(1000, 1, 1000, &mut seeded(2)).unwrap();
        let w = p.sentence.weight.as_slice();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / w.len() as f64;
        let expected = 2.0 / 2000.0;
        assert!((var / expected - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn normalize_examples() {
        let (u, len) = l2_normalize(&[3.0, 4.0]).unwrap();
        assert_eq!(u, [0.6, 0.8]);
        assert_eq!(len, 5.0);
        assert_eq!(l2_normalize(&[1.0, 0.0]).unwrap().0, [1.0, 0.0]);
        assert!(matches!(l2_normalize(&[0.0, 1e-13]), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn normalize_backward_matches_finite_differences() {
        let mut rng = seeded(3);
        for _ in 0..100 {
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (u, len) = l2_normalize(&v).unwrap();
            let analytic = l2_normalize_backward(&u, len, &g);
            let h = 1e-6;
            for k in 0..6 {
                let mut plus = v.clone();
                plus[k] += h;
                let mut minus = v.clone();
                minus[k] -= h;
                let f = |x: &[f64]| dot(&l2_normalize(x).unwrap().0, &g);
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                assert!((fd - analytic[k]).abs() <= 1e-7 * analytic[k].abs().max(1e-2), "{fd} vs {}", analytic[k]);
            }
        }
    }

    #[test]
    fn identity_projection_passes_unit_rows() {
        let mut params = EncoderParams::zeros(3, 3, 3);
        params.sentence.weight = Mat::identity(3);
        let x = Mat::from_rows(&[[0.6, 0.8, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let out = encode_eval(&x, Side::Sentence, &params).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn zero_dropout_in_train_mode_is_eval() {
        let mut rng = seeded(4);
        let params = init_params(4, 5, 6, &mut rng).unwrap();
        let x = random_mat(&mut rng, 3, 5);
        let (train, cache) = encode(&x, Side::Image, &params, 0.0, true, &mut rng).unwrap();
        assert!(cache.mask.is_none());
        assert_eq!(train, encode_eval(&x, Side::Image, &params).unwrap());
        assert!(encode(&x, Side::Sentence, &params, 0.0, false, &mut rng).is_err());
    }

    #[test]
    fn outputs_are_unit_norm() {
        let mut rng = seeded(5);
        let params = init_params(8, 8, 16, &mut rng).unwrap();
        let x = random_mat(&mut rng, 10, 8);
        let (out, _) = encode(&x, Side::Sentence, &params, 0.4, true, &mut rng).unwrap();
        for row in out.row_iter() {
            assert!((norm(row) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = seeded(6);
        let params = init_params(4, 4, 5, &mut rng).unwrap();
        let x = random_mat(&mut rng, 3, 4);
        let (out, cache) = encode(&x, Side::Sentence, &params, 0.0, false, &mut rng).unwrap();
        let g = backward(&cache, &params, &Mat::zeros(out.rows(), out.cols())).unwrap();
        assert!(g.weight.as_slice().iter().all(|&x| x == 0.0));
        assert!(g.bias.iter().all(|&x| x == 0.0));
        assert!(backward(&cache, &params, &Mat::zeros(1, 1)).is_err());
    }

    #[test]
    fn backward_reuses_forward_mask() {
        let mut rng = seeded(7);
        let params = init_params(6, 6, 4, &mut rng).unwrap();
        let x = random_mat(&mut rng, 4, 6);
        let (_, cache) = encode(&x, Side::Image, &params, 0.5, true, &mut rng).unwrap();
        let mask = cache.mask.clone().unwrap();
        for i in 0..4 {
            for k in 0..6 {
                assert_eq!(cache.dropped[(i, k)], x[(i, k)] * mask[(i, k)]);
            }
        }
        // An entry dropped in forward receives no input gradient.
        let upstream = Mat::from_fn(4, 4, |_, _| 1.0);
        let dx = input_gradient(&cache, &params, &upstream).unwrap();
        for (d, m) in dx.as_slice().iter().zip(mask.as_slice()) {
            if *m == 0.0 {
                assert_eq!(*d, 0.0);
            }
        }
    }

    /// Scalar head `sum_ij c_ij * out_ij` and its gradient `c`.
    fn head(out: &Mat, c: &Mat) -> f64 {
        dot(out.as_slice(), c.as_slice())
    }

    #[test]
    fn parameter_and_input_gradients_match_finite_differences() {
        let mut rng = seeded(8);
        for trial in 0..20 {
            let mut params = init_params(5, 4, 6, &mut rng).unwrap();
            params.sentence.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            let x = random_mat(&mut rng, 3, 5);
            let c = random_mat(&mut rng, 3, 6);
            let mask_seed = trial as u64;
            let forward = |p: &EncoderParams, x: &Mat| {
                let (out, cache) = encode(x, Side::Sentence, p, 0.3, true, &mut seeded(mask_seed)).unwrap();
                (head(&out, &c), cache)
            };
            let (_, cache) = forward(&params, &x);
            let g = backward(&cache, &params, &c).unwrap();
            let dx = input_gradient(&cache, &params, &c).unwrap();
            let h = 1e-6;
            let rel = |fd: f64, a: f64| (fd - a).abs() / a.abs().max(1e-3);
            for idx in 0..params.sentence.weight.as_slice().len() {
                let mut plus = params.clone();
                plus.sentence.weight.as_mut_slice()[idx] += h;
                let mut minus = params.clone();
                minus.sentence.weight.as_mut_slice()[idx] -= h;
                let fd = (forward(&plus, &x).0 - forward(&minus, &x).0) / (2.0 * h);
                assert!(rel(fd, g.weight.as_slice()[idx]) < 1e-5);
            }
            for k in 0..6 {
                let mut plus = params.clone();
                plus.sentence.bias[k] += h;
                let mut minus = params.clone();
                minus.sentence.bias[k] -= h;
                let fd = (forward(&plus, &x).0 - forward(&minus, &x).0) / (2.0 * h);
                assert!(rel(fd, g.bias[k]) < 1e-5);
            }
            for idx in 0..x.as_slice().len() {
                let mut plus = x.clone();
                plus.as_mut_slice()[idx] += h;
                let mut minus = x.clone();
                minus.as_mut_slice()[idx] -= h;
                let fd = (forward(&params, &plus).0 - forward(&params, &minus).0) / (2.0 * h);
                assert!(rel(fd, dx.as_slice()[idx]) < 1e-5);
            }
        }
    }
}
