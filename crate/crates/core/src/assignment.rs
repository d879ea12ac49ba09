//! Rectangular linear assignment, maximizing total weight.
//!
//! [`solve_assignment`] always returns a matching of size `min(n, m)`.
//! [`solve_assignment_capped`] returns the heaviest matching with exactly
//! `k` edges, which is also the heaviest with at most `k` edges whenever the
//! entries are non-negative. Both reduce maximization to minimization of the
//! shifted cost `max(M) - M`, which is non-negative and leaves the optimal
//! matching of any fixed size unchanged.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Mat, Result};

const UNMATCHED: usize = usize::MAX;

/// A set of matched `(row, col)` pairs sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution {
    pub matches: Vec<(usize, usize)>,
    /// Sum of the matched entries.
    pub total: f64,
}

impl AssignmentSolution {
    /// Number of matched edges.
    pub fn r(&self) -> usize {
        self.matches.len()
    }

    fn from_matches(weights: &Mat, mut matches: Vec<(usize, usize)>) -> Self {
        matches.sort_unstable();
        let total = matches.iter().map(|&(i, j)| weights[(i, j)]).sum();
        AssignmentSolution { matches, total }
    }
}

fn validate(weights: &Mat) -> Result<()> {
    if weights.rows() == 0 || weights.cols() == 0 {
        return Err(Error::Empty("assignment matrix"));
    }
    if !weights.is_finite() {
        return Err(Error::NonFinite("assignment matrix"));
    }
    Ok(())
}

fn shifted_cost(weights: &Mat) -> Mat {
    let top = weights.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    weights.map(|w| top - w)
}

/// Maximum-weight matching of size `min(n, m)`.
///
/// Rows are inserted one at a time, each by a Dijkstra-style shortest
/// augmenting path over reduced costs with dual potentials (the augmentation
/// phase of Jonker–Volgenant). Runs in `O(min(n,m)^2 * max(n,m))`.
pub fn solve_assignment(weights: &Mat) -> Result<AssignmentSolution> {
    validate(weights)?;
    let transposed = weights.rows() > weights.cols();
    let cost = if transposed { shifted_cost(&weights.transpose()) } else { shifted_cost(weights) };
    let row_to_col = shortest_augmenting_rows(&cost);
    let matches = row_to_col.into_iter().enumerate().map(|(i, j)| if transposed { (j, i) } else { (i, j) }).collect();
    Ok(AssignmentSolution::from_matches(weights, matches))
}

/// Min-cost assignment of every row of `cost` (rows <= cols, entries >= 0).
fn shortest_augmenting_rows(cost: &Mat) -> Vec<usize> {
    let (n, m) = cost.shape();
    // One-based bookkeeping: column 0 is a virtual source holding the row
    // currently being inserted.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut min_slack = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let cost_row = cost.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost_row[j - 1] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![UNMATCHED; n];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-weight matching with exactly `k` edges, `1 <= k <= min(n, m)`.
///
/// Successive shortest augmenting paths from the set of all free rows on the
/// shifted cost. After `t` augmentations the matching is a minimum-cost
/// matching of size `t`, so stopping at `k` gives the bounded-cardinality
/// optimum. Each phase is an `O(n * m)` dense Dijkstra.
pub fn solve_assignment_capped(weights: &Mat, k: usize) -> Result<AssignmentSolution> {
    validate(weights)?;
    let (n, m) = weights.shape();
    let max_k = n.min(m);
    if k == 0 || k > max_k {
        return Err(Error::CapOutOfRange { k, max: max_k });
    }
    let cost = shifted_cost(weights);

    // Free rows keep potential 0 throughout, so a multi-source Dijkstra that
    // starts every free row at distance 0 is exact in reduced costs.
    let mut row_pot = vec![0.0f64; n];
    let mut col_pot = vec![0.0f64; m];
    let mut row_match = vec![UNMATCHED; n];
    let mut col_match = vec![UNMATCHED; m];

    let mut col_dist = vec![0.0f64; m];
    let mut row_dist = vec![0.0f64; n];
    let mut col_pred = vec![UNMATCHED; m];
    let mut col_done = vec![false; m];
    let mut row_done = vec![false; n];

    for _ in 0..k {
        col_dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        col_done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            row_done[i] = row_match[i] == UNMATCHED;
            row_dist[i] = 0.0;
        }
        for i in (0..n).filter(|&i| row_match[i] == UNMATCHED) {
            relax_from_row(i, 0.0, &cost, &row_pot, &col_pot, &col_done, &mut col_dist, &mut col_pred);
        }

        let target = loop {
            let mut best = UNMATCHED;
            for j in 0..m {
                if !col_done[j] && (best == UNMATCHED || col_dist[j] < col_dist[best]) {
                    best = j;
                }
            }
            debug_assert_ne!(best, UNMATCHED, "complete bipartite graph always has a free column");
            col_done[best] = true;
            let i = col_match[best];
            if i == UNMATCHED {
                break best;
            }
            row_done[i] = true;
            row_dist[i] = col_dist[best];
            relax_from_row(i, row_dist[i], &cost, &row_pot, &col_pot, &col_done, &mut col_dist, &mut col_pred);
        };

        // Truncated potential update keeps every reduced cost non-negative
        // and makes the augmenting path tight.
        let reach = col_dist[target];
        for i in 0..n {
            row_pot[i] += if row_done[i] { row_dist[i].min(reach) } else { reach };
        }
        for j in 0..m {
            col_pot[j] += if col_done[j] { col_dist[j].min(reach) } else { reach };
        }
        // Free rows were settled at distance 0.
        debug_assert!((0..n).all(|i| row_match[i] != UNMATCHED || row_pot[i] == 0.0));

        let mut j = target;
        loop {
            let i = col_pred[j];
            let previous = row_match[i];
            row_match[i] = j;
            col_match[j] = i;
            if previous == UNMATCHED {
                break;
            }
            j = previous;
        }
    }

    let matches = row_match.iter().enumerate().filter(|&(_, &j)| j != UNMATCHED).map(|(i, &j)| (i, j)).collect();
    Ok(AssignmentSolution::from_matches(weights, matches))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn relax_from_row(
    i: usize,
    dist_i: f64,
    cost: &Mat,
    row_pot: &[f64],
    col_pot: &[f64],
    col_done: &[bool],
    col_dist: &mut [f64],
    col_pred: &mut [usize],
) {
    let row = cost.row(i);
    for j in 0..row.len() {
        if col_done[j] {
            continue;
        }
        let reduced = (row[j] + row_pot[i] - col_pot[j]).max(0.0);
        let d = dist_i + reduced;
        if d < col_dist[j] {
            col_dist[j] = d;
            col_pred[j] = i;
        }
    }
}

/// Largest side accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_MAX_SIDE: usize = 8;

/// Exhaustive optimum over all matchings with `min(k, n, m)` edges
/// (`min(n, m)` when `k` is `None`).
///
/// Among equal totals the lexicographically smallest sorted match list wins.
/// Intended as a test oracle.
pub fn brute_force_assignment(weights: &Mat, k: Option<usize>) -> Result<AssignmentSolution> {
    validate(weights)?;
    let (n, m) = weights.shape();
    if n.max(m) > BRUTE_FORCE_MAX_SIDE {
        return Err(Error::InstanceTooLarge { rows: n, cols: m });
    }
    let size = match k {
        Some(0) => return Err(Error::CapOutOfRange { k: 0, max: n.min(m) }),
        Some(k) => k.min(n.min(m)),
        None => n.min(m),
    };

    struct Search<'a> {
        weights: &'a Mat,
        size: usize,
        used_cols: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Option<(f64, Vec<(usize, usize)>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, row: usize, total: f64) {
            if self.current.len() == self.size {
                if self.best.as_ref().is_none_or(|(b, _)| total > *b) {
                    self.best = Some((total, self.current.clone()));
                }
                return;
            }
            let rows_left = self.weights.rows() - row;
            if rows_left < self.size - self.current.len() {
                return;
            }
            for j in 0..self.weights.cols() {
                if self.used_cols[j] {
                    continue;
                }
                self.used_cols[j] = true;
                self.current.push((row, j));
                self.visit(row + 1, total + self.weights[(row, j)]);
                self.current.pop();
                self.used_cols[j] = false;
            }
            self.visit(row + 1, total);
        }
    }

    let mut search = Search { weights, size, used_cols: vec![false; m], current: Vec::with_capacity(size), best: None };
    search.visit(0, 0.0);
    let (_, matches) = search.best.expect("at least one matching of each feasible size exists");
    Ok(AssignmentSolution::from_matches(weights, matches))
}
