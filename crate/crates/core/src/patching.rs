//! Local windows and the pixel ↔ patch index bookkeeping.
//!
//! A patch's `members` list plays the role of its selection matrix: entry
//! `j` of a local vector lives at global pixel `members[j]`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::imaging::RgbImage;
use crate::scalar::Real;
use crate::sparse::SparseAccumulator;

#[derive(Debug, Clone, PartialEq)]
pub struct Patch<T> {
    pub center: usize,
    /// Row-major order within the (border-shifted) window.
    pub members: Vec<usize>,
    /// 3×p, column `j` is the RGB of `members[j]`.
    pub colors: Array2<T>,
}

impl<T: Real> Patch<T> {
    /// Patch from explicit members, reading colors from `img`.
    pub fn from_members(img: &RgbImage<T>, center: usize, members: Vec<usize>) -> Self {
        let mut colors = Array2::zeros((3, members.len()));
        for (j, &m) in members.iter().enumerate() {
            let px = img.pixel(m);
            for ch in 0..3 {
                colors[[ch, j]] = px[ch];
            }
        }
        Self {
            center,
            members,
            colors,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Local position of the center pixel inside `members`.
    pub fn center_slot(&self) -> usize {
        self.members
            .iter()
            .position(|&m| m == self.center)
            .expect("center is a member")
    }
}

#[derive(Debug, Clone)]
pub struct PatchSet<T> {
    pub patches: Vec<Patch<T>>,
    pub image_pixels: usize,
    pub height: usize,
    pub width: usize,
    pub window: usize,
    pub stride: usize,
}

impl<T> PatchSet<T> {
    /// Window size p (= window²).
    pub fn patch_size(&self) -> usize {
        self.window * self.window
    }

    /// Whether each pixel belongs to at least one patch.
    pub fn covered(&self) -> Vec<bool> {
        let mut cov = vec![false; self.image_pixels];
        for p in &self.patches {
            for &m in &p.members {
                cov[m] = true;
            }
        }
        cov
    }

    /// For every pixel, the index of the nearest patch center (squared
    /// Euclidean grid distance, ties to the lower center index).
    pub fn nearest_center(&self) -> Vec<usize> {
        let s = self.stride;
        let rows: Vec<usize> = (0..self.height).step_by(s).collect();
        let cols: Vec<usize> = (0..self.width).step_by(s).collect();
        let nearest = |x: usize, grid: &[usize]| -> usize {
            let mut best = grid[0];
            for &g in grid {
                if x.abs_diff(g) < x.abs_diff(best) {
                    best = g;
                }
            }
            best
        };
        (0..self.image_pixels)
            .map(|i| {
                let (r, c) = (i / self.width, i % self.width);
                nearest(r, &rows) * self.width + nearest(c, &cols)
            })
            .collect()
    }
}

fn window_start(center: usize, window: usize, len: usize) -> usize {
    let half = window / 2;
    center.saturating_sub(half).min(len - window)
}

/// One patch per center on the stride grid. Windows touching the border are
/// shifted inward so that every patch holds exactly `window²` pixels.
pub fn extract_patches<T: Real>(
    img: &RgbImage<T>,
    window: usize,
    stride: usize,
) -> Result<PatchSet<T>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    let (h, w) = img.dims();
    if h < window || w < window {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            window,
        });
    }
    let mut patches = Vec::with_capacity(h.div_ceil(stride) * w.div_ceil(stride));
    for r in (0..h).step_by(stride) {
        let r0 = window_start(r, window, h);
        for c in (0..w).step_by(stride) {
            let c0 = window_start(c, window, w);
            let members: Vec<usize> = (r0..r0 + window)
                .flat_map(|rr| (c0..c0 + window).map(move |cc| rr * w + cc))
                .collect();
            patches.push(Patch::from_members(img, r * w + c, members));
        }
    }
    Ok(PatchSet {
        patches,
        image_pixels: h * w,
        height: h,
        width: w,
        window,
        stride,
    })
}

/// `M[members[r], members[c]] += local[r, c]`, i.e. `M += S L Sᵀ` for the
/// patch's selection matrix `S`.
pub fn scatter_add<T: Real>(
    acc: &mut SparseAccumulator<T>,
    patch: &Patch<T>,
    local: ArrayView2<T>,
) -> Result<()> {
    scatter_members(acc, &patch.members, local)
}

pub(crate) fn scatter_members<T: Real>(
    acc: &mut SparseAccumulator<T>,
    members: &[usize],
    local: ArrayView2<T>,
) -> Result<()> {
    let p = members.len();
    if local.dim() != (p, p) {
        return Err(Error::DimensionMismatch {
            expected: (p, p),
            actual: local.dim(),
        });
    }
    for (r, &gr) in members.iter().enumerate() {
        for (c, &gc) in members.iter().enumerate() {
            acc.add(gr, gc, local[[r, c]])?;
        }
    }
    Ok(())
}
