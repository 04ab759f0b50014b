use ndarray::{Array2, ArrayView2};

use super::graph::{connect_components, geodesic_distances, knn_adjacency, pairwise_distances};
use super::{center_rows, is_degenerate, SubspaceCoords};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::patching::Patch;
use crate::scalar::Real;

/// ISOMAP embedding of the columns of `points` (m×p) into `d` dimensions.
///
/// Geodesics come from the symmetric k-NN graph (components bridged by
/// shortest edges); classical MDS keeps eigenpairs with positive
/// eigenvalues and zero-fills the rest.
pub fn isomap_embed<T: Real>(points: ArrayView2<T>, d: usize, k: usize) -> Result<SubspaceCoords<T>> {
    let p = points.ncols();
    if p < 2 || d < 1 || d > p - 1 {
        return Err(Error::invalid(format!("isomap dimension {d} invalid for p={p}")));
    }
    if k < 1 || k > p - 1 {
        return Err(Error::invalid(format!("isomap k={k} invalid for p={p}")));
    }
    if is_degenerate(points) {
        return Ok(SubspaceCoords::zeros(d, p));
    }
    let dist = pairwise_distances(points);
    let mut adj = knn_adjacency(dist.view(), k);
    connect_components(&mut adj, dist.view());
    let geo = geodesic_distances(&adj, dist.view());
    Ok(classical_mds(geo.view(), d))
}

/// Classical MDS of a distance matrix: double-center `−½ D²` and scale the
/// top eigenvectors by `√λ`.
pub(crate) fn classical_mds<T: Real>(dist: ArrayView2<T>, d: usize) -> SubspaceCoords<T> {
    let p = dist.nrows();
    let pf = T::lit(p as f64);
    let sq = dist.mapv(|v| v * v);
    let row_means: Vec<T> = sq.rows().into_iter().map(|r| r.sum() / pf).collect();
    let total = row_means.iter().copied().sum::<T>() / pf;
    let half = T::lit(0.5);
    let b = Array2::from_shape_fn((p, p), |(i, j)| {
        -half * (sq[[i, j]] - row_means[i] - row_means[j] + total)
    });
    let eig = symmetric_eigen(b.view());
    let lmax = eig.values[0];
    let mut coords = Array2::zeros((d, p));
    let mut padded = 0;
    for r in 0..d {
        let lambda = eig.values[r];
        if lmax <= T::zero() || lambda <= lmax * T::rank_tol() {
            padded += 1;
            continue;
        }
        let s = lambda.sqrt();
        for j in 0..p {
            coords[[r, j]] = s * eig.vectors[[j, r]];
        }
    }
    center_rows(&mut coords);
    SubspaceCoords {
        coords,
        padded_rows: padded,
    }
}

pub fn isomap_coords<T: Real>(patch: &Patch<T>, d: usize, k: usize) -> Result<SubspaceCoords<T>> {
    isomap_embed(patch.colors.view(), d, k)
}

/// Two ISOMAP stages: colors → `schedule[0]` dims → `schedule[1]` dims.
pub fn cascade_isomap_coords<T: Real>(
    patch: &Patch<T>,
    schedule: &[usize],
    k: usize,
) -> Result<SubspaceCoords<T>> {
    let &[d1, d2] = schedule else {
        return Err(Error::invalid(format!(
            "cascade schedule needs two stages, got {schedule:?}"
        )));
    };
    let stage1 = isomap_embed(patch.colors.view(), d1, k)?;
    isomap_embed(stage1.coords.view(), d2, k)
}
