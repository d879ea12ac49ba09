//! Set-similarity functions over a sentence × image similarity matrix.
//!
//! Each function returns its value together with an exact subgradient with
//! respect to every matrix entry. Selections (argmaxes, top-k sets, the
//! optimal matching) are held fixed in the backward pass; argmax ties go to
//! the lowest index and gradient mass is never split.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, solve_assignment_capped};
use crate::linalg::{dot, norm};
use crate::{Error, Mat, Result};

/// Value of a set similarity and its gradient with respect to the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimValue {
    pub value: f64,
    pub grad: Mat,
}

/// How many links a document may carry, as a function of its shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum KPolicy {
    /// `min(n, m)`
    FullMin,
    /// `ceil(min(n, m) / 2)`
    HalfMin,
}

impl KPolicy {
    pub fn resolve(self, n: usize, m: usize) -> usize {
        let full = n.min(m);
        match self {
            KPolicy::FullMin => full.max(1),
            KPolicy::HalfMin => full.div_ceil(2).max(1),
        }
    }
}

/// Which structured similarity to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum SimKind {
    Dc,
    Tk,
    Ap,
}

/// A similarity kind with its link policy attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimFn {
    Dc,
    Tk(KPolicy),
    Ap(Option<KPolicy>),
}

impl SimFn {
    pub fn new(kind: SimKind, k_policy: Option<KPolicy>) -> Result<Self> {
        Ok(match kind {
            SimKind::Dc => SimFn::Dc,
            SimKind::Tk => {
                SimFn::Tk(k_policy.ok_or_else(|| Error::InvalidConfig("top-k similarity needs a k_policy".into()))?)
            }
            SimKind::Ap => SimFn::Ap(k_policy),
        })
    }

    pub fn evaluate(&self, sims: &Mat) -> Result<SimValue> {
        let (n, m) = sims.shape();
        match *self {
            SimFn::Dc => Ok(sim_dc(sims)),
            SimFn::Tk(policy) => Ok(sim_tk(sims, policy.resolve(n, m))),
            SimFn::Ap(cap) => sim_ap(sims, cap.map(|p| p.resolve(n, m))),
        }
    }
}

/// Pairwise dot products of sentence and image rows, which are cosines for
/// unit-norm rows.
pub fn cosine_matrix(sentences: &Mat, images: &Mat) -> Result<Mat> {
    if sentences.cols() != images.cols() {
        return Err(Error::DimensionMismatch { expected: sentences.cols(), found: images.cols() });
    }
    for row in sentences.row_iter().chain(images.row_iter()) {
        let len = norm(row);
        if !(len > 1e-12) {
            return Err(Error::ZeroNorm(len));
        }
    }
    Ok(Mat::from_fn(sentences.rows(), images.rows(), |i, j| dot(sentences.row(i), images.row(j))))
}

fn row_argmaxes(sims: &Mat) -> Vec<(f64, usize)> {
    sims.row_iter()
        .map(|row| {
            let mut best = (row[0], 0);
            for (j, &x) in row.iter().enumerate().skip(1) {
                if x > best.0 {
                    best = (x, j);
                }
            }
            best
        })
        .collect()
}

fn col_argmaxes(sims: &Mat) -> Vec<(f64, usize)> {
    let mut best: Vec<(f64, usize)> = sims.row(0).iter().map(|&x| (x, 0)).collect();
    for i in 1..sims.rows() {
        for (b, &x) in best.iter_mut().zip(sims.row(i)) {
            if x > b.0 {
                *b = (x, i);
            }
        }
    }
    best
}

/// Dense correspondence: mean best image per sentence plus mean best
/// sentence per image.
pub fn sim_dc(sims: &Mat) -> SimValue {
    let (n, m) = sims.shape();
    let mut grad = Mat::zeros(n, m);
    let rows = row_argmaxes(sims);
    let cols = col_argmaxes(sims);
    let row_sum: f64 = rows.iter().map(|r| r.0).sum();
    let col_sum: f64 = cols.iter().map(|c| c.0).sum();
    for (i, &(_, j)) in rows.iter().enumerate() {
        grad[(i, j)] += 1.0 / n as f64;
    }
    for (j, &(_, i)) in cols.iter().enumerate() {
        grad[(i, j)] += 1.0 / m as f64;
    }
    SimValue { value: row_sum / n as f64 + col_sum / m as f64, grad }
}

/// Indices of the `k` largest values, ties to the lower index.
fn top_k(values: &[(f64, usize)], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].0.total_cmp(&values[a].0).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Top-k: dense correspondence restricted to the `k` strongest row maxima
/// and the `k` strongest column maxima, each averaged over its own count.
///
/// `k` is clamped to `n` for rows and `m` for columns; `k = 0` is treated as 1.
pub fn sim_tk(sims: &Mat, k: usize) -> SimValue {
    let (n, m) = sims.shape();
    let k_rows = k.clamp(1, n);
    let k_cols = k.clamp(1, m);
    let mut grad = Mat::zeros(n, m);
    let rows = row_argmaxes(sims);
    let cols = col_argmaxes(sims);

    let mut row_sum = 0.0;
    for i in top_k(&rows, k_rows) {
        row_sum += rows[i].0;
        grad[(i, rows[i].1)] += 1.0 / k_rows as f64;
    }
    let mut col_sum = 0.0;
    for j in top_k(&cols, k_cols) {
        col_sum += cols[j].0;
        grad[(cols[j].1, j)] += 1.0 / k_cols as f64;
    }
    SimValue { value: row_sum / k_rows as f64 + col_sum / k_cols as f64, grad }
}

/// Assignment: mean weight of the optimal one-to-one matching, optionally
/// restricted to exactly `cap` edges.
pub fn sim_ap(sims: &Mat, cap: Option<usize>) -> Result<SimValue> {
    let solution = match cap {
        Some(k) => solve_assignment_capped(sims, k)?,
        None => solve_assignment(sims)?,
    };
    let r = solution.r() as f64;
    let mut grad = Mat::zeros(sims.rows(), sims.cols());
    for &(i, j) in &solution.matches {
        grad[(i, j)] = 1.0 / r;
    }
    Ok(SimValue { value: solution.total / r, grad })
}
