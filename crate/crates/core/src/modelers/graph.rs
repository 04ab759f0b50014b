//! Neighborhood graphs over the p points of a single patch.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

/// Pairwise Euclidean distances between the columns of `points` (m×p).
pub fn pairwise_distances<T: Real>(points: ArrayView2<T>) -> Array2<T> {
    let p = points.ncols();
    let mut d = Array2::zeros((p, p));
    for i in 0..p {
        for j in (i + 1)..p {
            let s: T = points
                .column(i)
                .iter()
                .zip(points.column(j).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            let v = s.sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Indices of the `k` nearest other points to `r`, nearest first, ties by index.
pub fn nearest_neighbors<T: Real>(dist: ArrayView2<T>, r: usize, k: usize) -> Vec<usize> {
    let p = dist.nrows();
    let mut others: Vec<usize> = (0..p).filter(|&j| j != r).collect();
    others.sort_by(|&a, &b| {
        dist[[r, a]]
            .partial_cmp(&dist[[r, b]])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    others.truncate(k);
    others
}

/// Symmetric k-NN adjacency: i and j are linked when either is among the
/// other's k nearest.
pub fn knn_adjacency<T: Real>(dist: ArrayView2<T>, k: usize) -> Array2<bool> {
    let p = dist.nrows();
    let mut adj = Array2::from_elem((p, p), false);
    for r in 0..p {
        for j in nearest_neighbors(dist, r, k) {
            adj[[r, j]] = true;
            adj[[j, r]] = true;
        }
    }
    adj
}

fn components(adj: &Array2<bool>) -> Vec<usize> {
    let p = adj.nrows();
    let mut label = vec![usize::MAX; p];
    let mut next = 0;
    for s in 0..p {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(u) = stack.pop() {
            for v in 0..p {
                if adj[[u, v]] && label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Links components by repeatedly inserting the single shortest edge that
/// joins two different components. Returns the number of edges added.
pub fn connect_components<T: Real>(adj: &mut Array2<bool>, dist: ArrayView2<T>) -> usize {
    let p = adj.nrows();
    let mut added = 0;
    loop {
        let label = components(adj);
        if label.iter().all(|&l| l == 0) {
            return added;
        }
        let mut best: Option<(usize, usize)> = None;
        for i in 0..p {
            for j in (i + 1)..p {
                if label[i] == label[j] {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bj)) => dist[[i, j]] < dist[[bi, bj]],
                };
                if better {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.expect("two components imply a crossing pair");
        adj[[i, j]] = true;
        adj[[j, i]] = true;
        added += 1;
    }
}

/// All-pairs shortest paths over `adj` weighted by `dist` (Floyd–Warshall).
pub fn geodesic_distances<T: Real>(adj: &Array2<bool>, dist: ArrayView2<T>) -> Array2<T> {
    let p = adj.nrows();
    let mut g = Array2::from_shape_fn((p, p), |(i, j)| {
        if i == j {
            T::zero()
        } else if adj[[i, j]] {
            dist[[i, j]]
        } else {
            T::infinity()
        }
    });
    for m in 0..p {
        for i in 0..p {
            let gim = g[[i, m]];
            if gim.is_infinite() {
                continue;
            }
            for j in 0..p {
                let via = gim + g[[m, j]];
                if via < g[[i, j]] {
                    g[[i, j]] = via;
                }
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_clusters_get_bridged_by_shortest_edge() {
        // 1-D points: {0, 0.1} and {5, 5.2}
        let pts: Array2<f64> = array![[0.0, 0.1, 5.0, 5.2]];
        let d = pairwise_distances(pts.view());
        let mut adj = knn_adjacency(d.view(), 1);
        assert!(!adj[[1, 2]]);
        assert_eq!(connect_components(&mut adj, d.view()), 1);
        assert!(adj[[1, 2]]);
        let g = geodesic_distances(&adj, d.view());
        assert!((g[[0, 3]] - 5.2).abs() < 1e-12);
    }

    #[test]
    fn ties_resolved_by_index() {
        let pts = array![[0.0, 1.0, -1.0]];
        let d = pairwise_distances(pts.view());
        assert_eq!(nearest_neighbors(d.view(), 0, 1), vec![1]);
    }
}
