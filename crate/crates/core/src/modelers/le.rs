use ndarray::{Array2, ArrayView2};

use super::graph::{connect_components, knn_adjacency, pairwise_distances};
use super::{center_rows, is_degenerate, ModelerConfig, SigmaRule, SubspaceCoords};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::patching::Patch;
use crate::scalar::Real;

/// Laplacian-eigenmap coordinates of the columns of `points`.
///
/// Heat-kernel weights on the symmetric k-NN graph; the generalized problem
/// `L y = λ D y` is solved through `D^{-1/2} W D^{-1/2}`. The constant
/// eigenvector is skipped, and each output row is centered then scaled to
/// unit norm.
pub fn le_embed<T: Real>(
    points: ArrayView2<T>,
    d: usize,
    k: usize,
    sigma: SigmaRule,
) -> Result<SubspaceCoords<T>> {
    let p = points.ncols();
    if p < 3 || d < 1 || d > p - 2 {
        return Err(Error::invalid(format!("le dimension {d} invalid for p={p}")));
    }
    if k < 1 || k > p - 1 {
        return Err(Error::invalid(format!("le k={k} invalid for p={p}")));
    }
    if is_degenerate(points) {
        return Ok(SubspaceCoords::zeros(d, p));
    }
    let dist = pairwise_distances(points);
    let mut adj = knn_adjacency(dist.view(), k);
    connect_components(&mut adj, dist.view());

    let sigma = match sigma {
        SigmaRule::Fixed(s) => T::lit(s),
        SigmaRule::MeanNeighborDistance => {
            let (mut sum, mut count) = (T::zero(), 0usize);
            for i in 0..p {
                for j in (i + 1)..p {
                    if adj[[i, j]] && dist[[i, j]] > T::zero() {
                        sum += dist[[i, j]];
                        count += 1;
                    }
                }
            }
            if count == 0 {
                return Ok(SubspaceCoords::zeros(d, p));
            }
            sum / T::lit(count as f64)
        }
    };
    let s2 = sigma * sigma;
    let weights = Array2::from_shape_fn((p, p), |(i, j)| {
        if adj[[i, j]] {
            (-(dist[[i, j]] * dist[[i, j]]) / s2).exp()
        } else {
            T::zero()
        }
    });
    let degree: Vec<T> = weights.rows().into_iter().map(|r| r.sum()).collect();
    if degree.iter().any(|&g| g <= T::min_positive_value()) {
        return Ok(SubspaceCoords {
            coords: Array2::zeros((d, p)),
            padded_rows: d,
        });
    }
    let inv_sqrt: Vec<T> = degree.iter().map(|&g| T::one() / g.sqrt()).collect();
    let normalized =
        Array2::from_shape_fn((p, p), |(i, j)| weights[[i, j]] * inv_sqrt[i] * inv_sqrt[j]);
    // largest eigenvalues of the normalized affinity are the smallest of L
    let eig = symmetric_eigen(normalized.view());
    let mut coords = Array2::zeros((d, p));
    for r in 0..d {
        let z = eig.vectors.column(r + 1);
        for j in 0..p {
            coords[[r, j]] = z[j] * inv_sqrt[j];
        }
    }
    center_rows(&mut coords);
    let mut padded = 0;
    for mut row in coords.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > T::epsilon() {
            row.mapv_inplace(|v| v / norm);
            let mut pivot = 0;
            for j in 0..p {
                if row[j].abs() > row[pivot].abs() {
                    pivot = j;
                }
            }
            if row[pivot] < T::zero() {
                row.mapv_inplace(|v| -v);
            }
        } else {
            row.fill(T::zero());
            padded += 1;
        }
    }
    Ok(SubspaceCoords {
        coords,
        padded_rows: padded,
    })
}

pub fn le_coords<T: Real>(
    patch: &Patch<T>,
    d: usize,
    k: usize,
    config: &ModelerConfig,
) -> Result<SubspaceCoords<T>> {
    le_embed(patch.colors.view(), d, k, config.le_sigma)
}
