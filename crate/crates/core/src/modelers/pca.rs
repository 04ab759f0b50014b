use ndarray::Array2;

use super::{center_colors, is_degenerate, SubspaceCoords};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::patching::Patch;
use crate::scalar::Real;

/// Local tangent coordinates `Qᵀ (X − X̄)` from the top-`d` eigenvectors of
/// the 3×3 color covariance.
pub fn pca_coords<T: Real>(patch: &Patch<T>, d: usize) -> Result<SubspaceCoords<T>> {
    let p = patch.size();
    if d < 1 || d > 3.min(p.saturating_sub(1)) {
        return Err(Error::invalid(format!("pca dimension {d} invalid for p={p}")));
    }
    if is_degenerate(patch.colors.view()) {
        return Ok(SubspaceCoords::zeros(d, p));
    }
    let (_, centered) = center_colors(patch);
    let cov = centered.dot(&centered.t()) / T::lit(p as f64);
    let eig = symmetric_eigen(cov.view());
    let lmax = eig.values[0].max(T::zero());
    let cutoff = lmax * T::rank_tol();
    let mut coords = Array2::zeros((d, p));
    let mut padded = 0;
    for r in 0..d {
        if eig.values[r] <= cutoff {
            padded += 1;
            continue;
        }
        let q = eig.vectors.column(r);
        for j in 0..p {
            coords[[r, j]] = q.dot(&centered.column(j));
        }
    }
    super::center_rows(&mut coords);
    Ok(SubspaceCoords {
        coords,
        padded_rows: padded,
    })
}
