use ndarray::{Array2, ArrayView2};

use super::graph::{nearest_neighbors, pairwise_distances};
use crate::linalg::solve_dense;
use crate::patching::Patch;
use crate::scalar::Real;

/// Reconstruction weights for every member of a patch.
#[derive(Debug, Clone, PartialEq)]
pub struct LleWeights<T> {
    /// `rows[r]` holds `(local neighbor index, weight)`, summing to one.
    pub rows: Vec<Vec<(usize, T)>>,
    /// Members whose Gram system was singular and got uniform weights.
    pub fallback_rows: Vec<usize>,
}

/// Weights reconstructing member `r` from its `k` nearest members in color.
///
/// Solves `(G + reg·tr(G)/k · E) w = e` on the local Gram matrix and
/// normalizes to unit sum. The flag is set when the system stayed singular
/// and uniform `1/k` weights were used instead.
pub fn lle_weight_row<T: Real>(
    points: ArrayView2<T>,
    r: usize,
    k: usize,
    reg: T,
) -> (Vec<(usize, T)>, bool) {
    let dist = pairwise_distances(points);
    let nbrs = nearest_neighbors(dist.view(), r, k);
    let k = nbrs.len();
    let uniform = |nbrs: &[usize]| {
        let w = T::one() / T::lit(nbrs.len() as f64);
        nbrs.iter().map(|&j| (j, w)).collect::<Vec<_>>()
    };
    let m = points.nrows();
    let diff = |j: usize, ch: usize| points[[ch, j]] - points[[ch, r]];
    let mut gram = Array2::<T>::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            gram[[a, b]] = (0..m).map(|ch| diff(nbrs[a], ch) * diff(nbrs[b], ch)).sum();
        }
    }
    let trace: T = (0..k).map(|a| gram[[a, a]]).sum();
    let ridge = reg * trace / T::lit(k as f64);
    for a in 0..k {
        gram[[a, a]] += ridge;
    }
    let ones = vec![T::one(); k];
    let Some(w) = solve_dense(gram.view(), &ones, T::epsilon() * T::lit(64.0)) else {
        return (uniform(&nbrs), true);
    };
    let total: T = w.iter().copied().sum();
    if !total.is_finite() || total.abs() <= T::epsilon() {
        return (uniform(&nbrs), true);
    }
    (
        nbrs.iter().zip(w).map(|(&j, wj)| (j, wj / total)).collect(),
        false,
    )
}

pub fn lle_weights<T: Real>(patch: &Patch<T>, k: usize, reg: T) -> LleWeights<T> {
    let mut rows = Vec::with_capacity(patch.size());
    let mut fallback_rows = Vec::new();
    for r in 0..patch.size() {
        let (row, fell_back) = lle_weight_row(patch.colors.view(), r, k, reg);
        if fell_back {
            fallback_rows.push(r);
        }
        rows.push(row);
    }
    LleWeights {
        rows,
        fallback_rows,
    }
}

/// Dense row `r` of `(E − W)` over `p` local slots: `+1` at `r`, `−w_j` at
/// each neighbor.
pub fn lle_patch_matrix<T: Real>(r: usize, weights: &[(usize, T)], p: usize) -> Vec<T> {
    let mut u = vec![T::zero(); p];
    u[r] = T::one();
    for &(j, w) in weights {
        u[j] -= w;
    }
    u
}
