//! Part modeling: per-patch subspace coordinates and the local energy
//! matrices that the alignment stage scatters into the global system.
//!
//! Coordinate methods ([`Method::Pca`], [`Method::Le`], [`Method::Isomap`],
//! [`Method::CasIso`]) produce `Y_i` and go through
//! `W_i = (E − eeᵀ/p)(E − Y_i⁺ Y_i)` with local energy `W_i W_iᵀ`.
//! [`Method::Lle`] instead contributes the outer product of its
//! reconstruction row of `(E − W)`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::row_space_projector;
use crate::patching::Patch;
use crate::scalar::Real;

pub mod graph;
mod isomap;
mod le;
mod lle;
mod pca;

pub use isomap::{cascade_isomap_coords, isomap_coords, isomap_embed};
pub use le::{le_coords, le_embed};
pub use lle::{lle_patch_matrix, lle_weight_row, lle_weights, LleWeights};
pub use pca::pca_coords;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Local PCA tangent coordinates (LTSA matting).
    Pca,
    Lle,
    Le,
    Isomap,
    CasIso,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Pca,
        Method::Lle,
        Method::Le,
        Method::Isomap,
        Method::CasIso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Lle => "lle",
            Method::Le => "le",
            Method::Isomap => "isomap",
            Method::CasIso => "casiso",
        }
    }

    pub fn default_dims(self) -> DimSchedule {
        match self {
            Method::CasIso => DimSchedule(vec![3, 3]),
            _ => DimSchedule(vec![2]),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pca" | "ltsa" => Ok(Method::Pca),
            "lle" => Ok(Method::Lle),
            "le" => Ok(Method::Le),
            "isomap" | "iso" => Ok(Method::Isomap),
            "casiso" => Ok(Method::CasIso),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Target dimensions: one entry for single-stage methods, `[d1, d2]` for
/// the two-stage cascade.
///
/// The text form for the cascade prefixes the RGB source dimension, as in
/// `3-4-2` (raise 3 → 4, then reduce 4 → 2); `4-2` is accepted too.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimSchedule(pub Vec<usize>);

impl DimSchedule {
    pub fn single(d: usize) -> Self {
        DimSchedule(vec![d])
    }

    pub fn cascade(d1: usize, d2: usize) -> Self {
        DimSchedule(vec![d1, d2])
    }

    /// The six cascade schedules of the dimension study.
    pub fn cascade_table() -> Vec<DimSchedule> {
        [(3, 2), (3, 3), (4, 2), (4, 3), (5, 2), (5, 3)]
            .into_iter()
            .map(|(a, b)| DimSchedule::cascade(a, b))
            .collect()
    }

    pub fn stages(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for DimSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 2 {
            write!(f, "3-{}-{}", self.0[0], self.0[1])
        } else {
            let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
            f.write_str(&parts.join("-"))
        }
    }
}

impl FromStr for DimSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: std::result::Result<Vec<usize>, _> =
            s.trim().split('-').map(|p| p.trim().parse::<usize>()).collect();
        let mut parts = parts.map_err(|_| Error::invalid(format!("bad dims '{s}'")))?;
        if parts.len() == 3 {
            if parts[0] != 3 {
                return Err(Error::invalid(format!(
                    "three-part dims must start from the RGB dimension 3, got '{s}'"
                )));
            }
            parts.remove(0);
        }
        if parts.is_empty() || parts.len() > 2 {
            return Err(Error::invalid(format!("bad dims '{s}'")));
        }
        Ok(DimSchedule(parts))
    }
}

/// Bandwidth of the Laplacian-eigenmap heat kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule {
    MeanNeighborDistance,
    Fixed(f64),
}

impl fmt::Display for SigmaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaRule::MeanNeighborDistance => f.write_str("mean"),
            SigmaRule::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for SigmaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mean") {
            return Ok(SigmaRule::MeanNeighborDistance);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaRule::Fixed(v)),
            _ => Err(Error::invalid(format!("bad sigma rule '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelerConfig {
    pub method: Method,
    pub dims: DimSchedule,
    pub k: usize,
    pub lle_reg: f64,
    pub le_sigma: SigmaRule,
}

impl Default for ModelerConfig {
    fn default() -> Self {
        Self::for_method(Method::CasIso)
    }
}

impl ModelerConfig {
    pub fn for_method(method: Method) -> Self {
        Self {
            method,
            dims: method.default_dims(),
            k: 4,
            lle_reg: 1e-3,
            le_sigma: SigmaRule::MeanNeighborDistance,
        }
    }

    /// Checks every parameter against patch size `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        if p < 2 {
            return Err(Error::invalid("patch size must be >= 2"));
        }
        if self.k < 1 || self.k > p - 1 {
            return Err(Error::invalid(format!("k={} outside [1, {}]", self.k, p - 1)));
        }
        if !(self.lle_reg >= 0.0 && self.lle_reg.is_finite()) {
            return Err(Error::invalid("lle_reg must be finite and >= 0"));
        }
        let dims = self.dims.stages();
        let want = if self.method == Method::CasIso { 2 } else { 1 };
        if dims.len() != want {
            return Err(Error::invalid(format!(
                "{} expects {} dimension stage(s), got '{}'",
                self.method, want, self.dims
            )));
        }
        let upper = match self.method {
            Method::Pca => 3.min(p - 1),
            Method::Le => p.saturating_sub(2),
            _ => p - 1,
        };
        if let Some(d) = dims.iter().find(|&&d| d < 1 || d > upper) {
            return Err(Error::invalid(format!(
                "dimension {d} outside [1, {upper}] for {}",
                self.method
            )));
        }
        Ok(())
    }

    /// Compact, comma-free description used in metric records.
    pub fn summary(&self) -> String {
        match self.method {
            Method::Lle => format!("lle:k{}", self.k),
            Method::Pca => format!("pca:{}", self.dims),
            m => format!("{}:{}:k{}", m, self.dims, self.k),
        }
    }
}

/// Low-dimensional coordinates of a patch's members, d×p with centered rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceCoords<T> {
    pub coords: Array2<T>,
    /// Rows zero-filled because fewer usable eigenpairs existed than requested.
    pub padded_rows: usize,
}

impl<T: Real> SubspaceCoords<T> {
    pub fn zeros(d: usize, p: usize) -> Self {
        Self {
            coords: Array2::zeros((d, p)),
            padded_rows: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&v| v == T::zero())
    }
}

/// `W_i`, p×p with zero column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix<T> {
    pub w: Array2<T>,
}

impl<T: Real> PatchMatrix<T> {
    /// Local energy `W Wᵀ`.
    pub fn energy(&self) -> Array2<T> {
        self.w.dot(&self.w.t())
    }
}

/// Row means and the mean-removed 3×p color matrix.
pub fn center_colors<T: Real>(patch: &Patch<T>) -> (Array1<T>, Array2<T>) {
    center_points(patch.colors.view())
}

pub(crate) fn center_points<T: Real>(points: ArrayView2<T>) -> (Array1<T>, Array2<T>) {
    let p = T::lit(points.ncols() as f64);
    let mean = Array1::from_iter(points.rows().into_iter().map(|r| r.sum() / p));
    let mut centered = points.to_owned();
    for (mut row, &m) in centered.rows_mut().into_iter().zip(mean.iter()) {
        row.mapv_inplace(|v| v - m);
    }
    (mean, centered)
}

/// Centers the rows of `coords` in place.
pub(crate) fn center_rows<T: Real>(coords: &mut Array2<T>) {
    let p = T::lit(coords.ncols() as f64);
    for mut row in coords.rows_mut() {
        let m = row.sum() / p;
        row.mapv_inplace(|v| v - m);
    }
}

/// True when all points coincide up to rounding.
pub(crate) fn is_degenerate<T: Real>(points: ArrayView2<T>) -> bool {
    let (_, centered) = center_points(points);
    let scale = points.iter().fold(T::one(), |a, &v| a.max(v.abs()));
    let tol = T::epsilon() * T::lit(64.0) * scale;
    centered.iter().all(|v| v.abs() <= tol)
}

/// `W = (E − eeᵀ/p)(E − Y⁺Y)`.
pub fn patch_alignment_w<T: Real>(coords: &SubspaceCoords<T>) -> PatchMatrix<T> {
    let p = coords.coords.ncols();
    let proj = row_space_projector(coords.coords.view());
    let inv_p = T::one() / T::lit(p as f64);
    let centering = Array2::from_shape_fn((p, p), |(i, j)| {
        let id = if i == j { T::one() } else { T::zero() };
        id - inv_p
    });
    let residual = Array2::from_shape_fn((p, p), |(i, j)| {
        let id = if i == j { T::one() } else { T::zero() };
        id - proj[[i, j]]
    });
    PatchMatrix {
        w: centering.dot(&residual),
    }
}

/// Per-patch bookkeeping surfaced through assembly diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PatchFlags {
    pub degenerate: bool,
    pub padded_rows: usize,
    pub lle_fallback: bool,
}

/// Subspace coordinates of a patch under a coordinate method.
pub fn subspace_coords<T: Real>(
    patch: &Patch<T>,
    config: &ModelerConfig,
) -> Result<SubspaceCoords<T>> {
    let dims = config.dims.stages();
    match config.method {
        Method::Pca => pca_coords(patch, dims[0]),
        Method::Isomap => isomap_coords(patch, dims[0], config.k),
        Method::CasIso => cascade_isomap_coords(patch, dims, config.k),
        Method::Le => le_coords(patch, dims[0], config.k, config),
        Method::Lle => Err(Error::invalid(
            "lle produces reconstruction weights, not subspace coordinates",
        )),
    }
}

/// The p×p local energy matrix `L_i` of one patch.
pub fn local_energy<T: Real>(
    patch: &Patch<T>,
    config: &ModelerConfig,
) -> Result<(Array2<T>, PatchFlags)> {
    let mut flags = PatchFlags {
        degenerate: is_degenerate(patch.colors.view()),
        ..Default::default()
    };
    if config.method == Method::Lle {
        let slot = patch.center_slot();
        let (row, fallback) =
            lle_weight_row(patch.colors.view(), slot, config.k, T::lit(config.lle_reg));
        flags.lle_fallback = fallback;
        let u = lle_patch_matrix(slot, &row, patch.size());
        let energy = Array2::from_shape_fn((u.len(), u.len()), |(i, j)| u[i] * u[j]);
        return Ok((energy, flags));
    }
    let coords = subspace_coords(patch, config)?;
    flags.padded_rows = coords.padded_rows;
    Ok((patch_alignment_w(&coords).energy(), flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::RgbImage;
    use crate::patching::extract_patches;

    fn patch_of(colors: &[[f64; 3]]) -> Patch<f64> {
        let p = colors.len();
        let img = RgbImage::from_fn(1, p, |_, c| colors[c]);
        Patch::from_members(&img, 0, (0..p).collect())
    }

    #[test]
    fn centering_constant_and_pair() {
        let (_, c) = center_colors(&patch_of(&[[0.3, 0.2, 0.1]; 4]));
        assert!(c.iter().all(|&v| v == 0.0));
        let (m, c) = center_colors(&patch_of(&[[0.0; 3], [1.0; 3]]));
        assert_eq!(m.to_vec(), vec![0.5; 3]);
        assert_eq!(c.column(0).to_vec(), vec![-0.5; 3]);
        assert_eq!(c.column(1).to_vec(), vec![0.5; 3]);
    }

    #[test]
    fn zero_coords_give_centering_projector() {
        let w = patch_alignment_w(&SubspaceCoords::<f64>::zeros(2, 9));
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 - 1.0 / 9.0 } else { -1.0 / 9.0 };
                assert!((w.w[[i, j]] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dims_text_forms() {
        let s: DimSchedule = "3-4-2".parse().unwrap();
        assert_eq!(s, DimSchedule::cascade(4, 2));
        assert_eq!(s.to_string(), "3-4-2");
        assert_eq!("4-2".parse::<DimSchedule>().unwrap(), s);
        assert_eq!("2".parse::<DimSchedule>().unwrap(), DimSchedule::single(2));
        assert!("5-4-2".parse::<DimSchedule>().is_err());
        assert!("x".parse::<DimSchedule>().is_err());
    }

    #[test]
    fn config_validation() {
        for m in Method::ALL {
            ModelerConfig::for_method(m).validate(9).unwrap();
        }
        let mut c = ModelerConfig::for_method(Method::Pca);
        c.dims = DimSchedule::single(4);
        assert!(c.validate(9).is_err());
        let mut c = ModelerConfig::for_method(Method::Isomap);
        c.k = 9;
        assert!(c.validate(9).is_err());
        let mut c = ModelerConfig::for_method(Method::CasIso);
        c.dims = DimSchedule::single(3);
        assert!(c.validate(9).is_err());
        let mut c = ModelerConfig::for_method(Method::Le);
        c.dims = DimSchedule::single(8);
        assert!(c.validate(9).is_err());
    }

    #[test]
    fn every_method_local_energy_annihilates_constants() {
        let img = RgbImage::from_fn(5, 5, |r, c| {
            let t = ((r * 13 + c * 7) % 17) as f64 / 17.0;
            [t, (t * 3.1).sin().abs(), 1.0 - t * t]
        });
        let ps = extract_patches(&img, 3, 1).unwrap();
        for m in Method::ALL {
            let cfg = ModelerConfig::for_method(m);
            for patch in &ps.patches {
                let (l, _) = local_energy(patch, &cfg).unwrap();
                for row in l.rows() {
                    assert!(row.sum().abs() < 1e-9, "{m}: row sum {}", row.sum());
                }
            }
        }
    }

    #[test]
    fn summary_has_no_commas() {
        for m in Method::ALL {
            assert!(!ModelerConfig::for_method(m).summary().contains(','));
        }
    }
}
