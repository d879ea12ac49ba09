//! Why some documents are harder than others: regress per-document AUC on
//! how spread out a document's items are, then on spread plus a PCA summary
//! of its content.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TextEncoder};
use crate::linalg::{axpy, cholesky_solve, dot, norm, symmetric_eigen};
use crate::rng::{self, standard_normal};
use crate::{Error, Mat, Result};

/// Content dimensions kept by [`difficulty_regression`].
pub const CONTENT_DIMS: usize = 20;

const PCA_TOL: f64 = 1e-9;
const PCA_MAX_ITERS: usize = 20_000;
/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;
/// Relative pivot floor for the normal equations.
const OLS_PIVOT_TOL: f64 = 1e-12;
/// Columns whose residual after projection on earlier columns is below this
/// fraction of their norm are dropped as collinear.
const COLLINEAR_TOL: f64 = 1e-8;

/// Mean squared distance of the L2-normalized rows to their centroid.
pub fn spread(vectors: &Mat) -> Result<f64> {
    if vectors.rows() == 0 {
        return Err(Error::Empty("spread input"));
    }
    let mut units = Mat::zeros(vectors.rows(), vectors.cols());
    for (i, v) in vectors.row_iter().enumerate() {
        let len = norm(v);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::ZeroNorm(len));
        }
        units.row_mut(i).iter_mut().zip(v).for_each(|(u, x)| *u = x / len);
    }
    let n = units.rows() as f64;
    let mut centroid = vec![0.0; units.cols()];
    for u in units.row_iter() {
        axpy(1.0 / n, u, &mut centroid);
    }
    let total: f64 =
        units.row_iter().map(|u| u.iter().zip(&centroid).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()).sum();
    Ok(total / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Principal directions as rows, `dims x D`; zero rows for degenerate
    /// components.
    pub components: Mat,
    /// Variance along each component (covariance eigenvalue, `N - 1`
    /// normalization).
    pub explained_variance: Vec<f64>,
    /// Share of the total variance along each component.
    pub explained_ratio: Vec<f64>,
    /// Set for components that carry no variance, including padding beyond
    /// the data dimension.
    pub degenerate: Vec<bool>,
    /// Centered data projected on the components, `N x dims`.
    pub projected: Mat,
}

impl Pca {
    pub fn is_rank_deficient(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

/// Orthonormalizes the columns of `q` in place (modified Gram-Schmidt).
/// Columns that collapse are replaced by a fresh random direction.
fn orthonormalize_columns(q: &mut Mat, rng: &mut rng::Rng) {
    let (d, k) = q.shape();
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| q.column(j)).collect();
    for j in 0..k {
        for attempt in 0..8 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj = dot(&done[i], &rest[0]);
                axpy(-proj, &done[i], &mut rest[0]);
            }
            let len = norm(&cols[j]);
            if len > 1e-10 || attempt == 7 {
                cols[j].iter_mut().for_each(|x| *x /= len.max(f64::MIN_POSITIVE));
                break;
            }
            cols[j] = (0..d).map(|_| standard_normal(rng)).collect();
        }
    }
    *q = Mat::from_fn(d, k, |i, j| cols[j][i]);
}

/// Top `dims` principal components by subspace iteration with Rayleigh-Ritz
/// extraction on the covariance matrix. Each component's largest-magnitude
/// coordinate is made positive.
pub fn pca_reduce(data: &Mat, dims: usize) -> Result<Pca> {
    let (n, d) = data.shape();
    if dims == 0 || d == 0 {
        return Err(Error::Empty("pca dimensions"));
    }
    if n <= dims {
        return Err(Error::TooFewObservations { needed: dims + 1, available: n });
    }
    if !data.is_finite() {
        return Err(Error::NonFinite("pca input"));
    }
    let mut mean = vec![0.0; d];
    for row in data.row_iter() {
        axpy(1.0 / n as f64, row, &mut mean);
    }
    let centered = Mat::from_fn(n, d, |i, j| data[(i, j)] - mean[j]);
    let cov = {
        let mut c = centered.transpose().matmul(&centered)?;
        c.as_mut_slice().iter_mut().for_each(|x| *x /= (n - 1) as f64);
        c
    };
    let total_variance: f64 = (0..d).map(|j| cov[(j, j)]).sum();

    let wanted = dims.min(d);
    let block = (wanted + 5).min(d);
    let mut rng = rng::seeded(0x5CA1AB1E);
    let mut q = Mat::from_fn(d, block, |_, _| standard_normal(&mut rng));
    orthonormalize_columns(&mut q, &mut rng);
    let mut values = vec![0.0; block];
    let mut vectors = q.clone();
    for _ in 0..PCA_MAX_ITERS {
        let z = cov.matmul(&q)?;
        // Rayleigh-Ritz on the current subspace.
        let h = q.transpose().matmul(&z)?;
        let (ritz, rot) = symmetric_eigen(&h);
        vectors = q.matmul(&rot)?;
        let cz = z.matmul(&rot)?;
        let scale = ritz[0].abs().max(f64::MIN_POSITIVE);
        let converged = (0..wanted).all(|j| {
            let residual: f64 = (0..d).map(|i| libm::pow(cz[(i, j)] - ritz[j] * vectors[(i, j)], 2.0)).sum();
            libm::sqrt(residual) <= PCA_TOL * scale
        });
        let stalled = ritz.iter().zip(&values).take(wanted).all(|(a, b)| (a - b).abs() <= PCA_TOL * scale * 1e-3);
        values = ritz;
        if converged || stalled || total_variance == 0.0 {
            break;
        }
        q = cz;
        orthonormalize_columns(&mut q, &mut rng);
    }

    let floor = RANK_TOL * values[0].max(0.0);
    let mut components = Mat::zeros(dims, d);
    let mut explained_variance = vec![0.0; dims];
    let mut degenerate = vec![true; dims];
    for j in 0..wanted {
        if !(values[j] > floor) || total_variance == 0.0 {
            continue;
        }
        let mut v = vectors.column(j);
        let len = norm(&v);
        v.iter_mut().for_each(|x| *x /= len);
        let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.row_mut(j).copy_from_slice(&v);
        explained_variance[j] = values[j];
        degenerate[j] = false;
    }
    let explained_ratio =
        explained_variance.iter().map(|&v| if total_variance > 0.0 { v / total_variance } else { 0.0 }).collect();
    let projected = centered.matmul_transposed(&components)?;
    Ok(Pca { mean, components, explained_variance, explained_ratio, degenerate, projected })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OlsFit {
    /// Intercept first, then one coefficient per regressor.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Infinite for a perfect fit with regressors.
    pub f_statistic: f64,
    pub dof_model: usize,
    pub dof_residual: usize,
}

/// Ordinary least squares with an intercept, solved through the normal
/// equations.
pub fn ols_fit(x: &Mat, y: &[f64]) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n < p + 2 {
        return Err(Error::TooFewObservations { needed: p + 2, available: n });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    let design = Mat::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let xt = design.transpose();
    let gram = xt.matmul(&design)?;
    let rhs: Vec<f64> = xt.row_iter().map(|col| dot(col, y)).collect();
    let coefficients = cholesky_solve(&gram, &rhs, OLS_PIVOT_TOL)?;

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let ssr: f64 = design.row_iter().zip(y).map(|(row, v)| libm::pow(v - dot(row, &coefficients), 2.0)).sum();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 0.0 };
    let dof_residual = n - p - 1;
    let f_statistic = if p == 0 {
        0.0
    } else if r_squared >= 1.0 {
        f64::INFINITY
    } else {
        (r_squared / p as f64) / ((1.0 - r_squared) / dof_residual as f64)
    };
    Ok(OlsFit { coefficients, r_squared, f_statistic, dof_model: p, dof_residual })
}

/// Indices of the columns that are not (numerically) in the span of the
/// intercept and the earlier kept columns.
fn independent_columns(columns: &[Vec<f64>]) -> Vec<usize> {
    let n = columns.first().map_or(0, Vec::len);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if n > 0 {
        basis.push(vec![1.0 / libm::sqrt(n as f64); n]);
    }
    let mut kept = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let len = norm(col);
        let mut r = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &r);
                axpy(-c, b, &mut r);
            }
        }
        let rest = norm(&r);
        if len > 0.0 && rest > COLLINEAR_TOL * len {
            r.iter_mut().for_each(|x| *x /= rest);
            basis.push(r);
            kept.push(j);
        }
    }
    kept
}

fn design_from(columns: &[Vec<f64>], keep: &[usize], n: usize) -> Mat {
    Mat::from_fn(n, keep.len(), |i, j| columns[keep[j]][i])
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DocDifficulty {
    pub doc_id: String,
    pub auc: f64,
    pub image_spread: f64,
    pub text_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DifficultyReport {
    pub spread_only: OlsFit,
    pub spread_plus_content: OlsFit,
    /// Content components that entered the second fit.
    pub content_dims_used: usize,
    /// Regressors dropped from either fit because they were constant or
    /// collinear with earlier ones.
    pub dropped_regressors: usize,
    pub per_document: Vec<DocDifficulty>,
}

/// Fits AUC on (image spread, text spread), then on those plus the top
/// [`CONTENT_DIMS`] principal components of each document's content, where
/// content is the mean sentence vector concatenated with the mean image
/// vector. Documents without an entry in `auc` are ignored.
pub fn difficulty_regression(
    auc: &[(String, f64)],
    corpus: &Corpus,
    text_encoder: TextEncoder,
    max_tokens: usize,
) -> Result<DifficultyReport> {
    let mut per_document = Vec::new();
    let mut content_rows: Vec<Vec<f64>> = Vec::new();
    for doc in &corpus.documents {
        let Some(&(_, value)) = auc.iter().find(|(id, _)| *id == doc.id) else {
            continue;
        };
        let sentences = corpus.sentence_vectors(doc, text_encoder, max_tokens)?;
        let images = corpus.image_vectors(doc)?;
        let mut content = vec![0.0; sentences.cols() + images.cols()];
        let (left, right) = content.split_at_mut(sentences.cols());
        for row in sentences.row_iter() {
            axpy(1.0 / sentences.rows() as f64, row, left);
        }
        for row in images.row_iter() {
            axpy(1.0 / images.rows() as f64, row, right);
        }
        content_rows.push(content);
        per_document.push(DocDifficulty {
            doc_id: doc.id.clone(),
            auc: value,
            image_spread: spread(&images)?,
            text_spread: spread(&sentences)?,
        });
    }
    let n = per_document.len();
    let min_docs = CONTENT_DIMS + 4;
    if n < min_docs {
        return Err(Error::TooFewObservations { needed: min_docs, available: n });
    }
    let y: Vec<f64> = per_document.iter().map(|d| d.auc).collect();
    let content = Mat::from_fn(n, content_rows[0].len(), |i, j| content_rows[i][j]);
    let pca = pca_reduce(&content, CONTENT_DIMS)?;

    let mut columns = vec![
        per_document.iter().map(|d| d.image_spread).collect::<Vec<_>>(),
        per_document.iter().map(|d| d.text_spread).collect(),
    ];
    for (j, &degenerate) in pca.degenerate.iter().enumerate() {
        if !degenerate {
            columns.push(pca.projected.column(j));
        }
    }
    let spread_keep = independent_columns(&columns[..2]);
    let all_keep = independent_columns(&columns);
    let spread_only = ols_fit(&design_from(&columns, &spread_keep, n), &y)?;
    let spread_plus_content = ols_fit(&design_from(&columns, &all_keep, n), &y)?;
    Ok(DifficultyReport {
        spread_only,
        spread_plus_content,
        content_dims_used: all_keep.iter().filter(|&&j| j >= 2).count(),
        dropped_regressors: (2 - spread_keep.len()) + (columns.len() - all_keep.len()),
        per_document,
    })
}
