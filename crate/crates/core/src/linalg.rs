//! Small dense kernels used by the per-patch modelers.
//!
//! Matrices here are at most a few dozen rows, so everything is plain
//! O(n^3) with deterministic iteration order.

use ndarray::{Array1, Array2, ArrayView2};

use crate::scalar::Real;

/// Eigendecomposition of a symmetric matrix.
///
/// `values` are sorted descending, `vectors` holds the matching unit
/// eigenvectors as columns. Each vector's largest-magnitude entry is positive.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver; the input is symmetrized before rotating.
pub fn symmetric_eigen<T: Real>(a: ArrayView2<T>) -> SymmetricEigen<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    let half = T::lit(0.5);
    let mut m = Array2::from_shape_fn((n, n), |(i, j)| (a[[i, j]] + a[[j, i]]) * half);
    let mut v = Array2::<T>::eye(n);

    let scale: T = m.iter().map(|&x| x * x).sum::<T>();
    let threshold = scale * T::epsilon() * T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off <= threshold || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[[j, j]]
            .partial_cmp(&m[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<T>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for k in 0..n {
            if v[[k, src]].abs() > v[[pivot, src]].abs() {
                pivot = k;
            }
        }
        let sign = if v[[pivot, src]] < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        for k in 0..n {
            vectors[[k, dst]] = v[[k, src]] * sign;
        }
    }
    SymmetricEigen { values, vectors }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `rel_tol` times the largest
/// absolute entry of `a`.
pub fn solve_dense<T: Real>(a: ArrayView2<T>, b: &[T], rel_tol: T) -> Option<Vec<T>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.to_owned();
    let mut x = b.to_vec();
    let amax = m.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if amax == T::zero() || !amax.is_finite() {
        return None;
    }
    let tol = amax * rel_tol;
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[[r, col]].abs() > m[[piv, col]].abs() {
                piv = r;
            }
        }
        if m[[piv, col]].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap([piv, c], [col, c]);
            }
            x.swap(piv, col);
        }
        let d = m[[col, col]];
        for r in (col + 1)..n {
            let f = m[[r, col]] / d;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let upd = m[[col, c]];
                m[[r, c]] -= f * upd;
            }
            let xc = x[col];
            x[r] -= f * xc;
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for c in (col + 1)..n {
            acc -= m[[col, c]] * x[c];
        }
        x[col] = acc / m[[col, col]];
    }
    Some(x)
}

/// Orthogonal projector onto the row space of `y` (that is `y⁺ y`).
///
/// Built from the eigendecomposition of the small Gram matrix `y yᵀ`;
/// eigenvalues under `rank_tol · λ_max` are dropped.
pub fn row_space_projector<T: Real>(y: ArrayView2<T>) -> Array2<T> {
    let p = y.ncols();
    let gram = y.dot(&y.t());
    let eig = symmetric_eigen(gram.view());
    let lmax = eig.values.iter().fold(T::zero(), |a, &v| a.max(v));
    let mut proj = Array2::<T>::zeros((p, p));
    if lmax <= T::zero() {
        return proj;
    }
    let cutoff = lmax * T::rank_tol();
    for (r, &lambda) in eig.values.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        // right singular vector: yᵀ u / sqrt(λ)
        let u = eig.vectors.column(r);
        let inv = T::one() / lambda.sqrt();
        let vcol: Array1<T> = y.t().dot(&u).mapv(|x| x * inv);
        for i in 0..p {
            for j in 0..p {
                proj[[i, j]] += vcol[i] * vcol[j];
            }
        }
    }
    proj
}
