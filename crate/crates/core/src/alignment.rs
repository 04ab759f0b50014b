//! Whole alignment: sum per-patch energies into the global sparse matrix
//! and fold in the trimap prior.

use crate::error::{Error, Result};
use crate::imaging::Trimap;
use crate::modelers::{local_energy, ModelerConfig, PatchFlags};
use crate::patching::{scatter_add, Patch, PatchSet};
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, SparseAccumulator};

/// Global N×N patch alignment matrix `M = Σ S_i L_i S_iᵀ`.
pub type AlignmentMatrix<T> = CsrMatrix<T>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyDiagnostics {
    pub patches: usize,
    pub degenerate_patches: usize,
    /// Patches whose embedding had fewer usable dimensions than requested.
    pub padded_patches: usize,
    pub lle_fallbacks: usize,
}

impl AssemblyDiagnostics {
    fn record(&mut self, flags: PatchFlags) {
        self.patches += 1;
        self.degenerate_patches += flags.degenerate as usize;
        self.padded_patches += (flags.padded_rows > 0) as usize;
        self.lle_fallbacks += flags.lle_fallback as usize;
    }

    fn merge(&mut self, other: AssemblyDiagnostics) {
        self.patches += other.patches;
        self.degenerate_patches += other.degenerate_patches;
        self.padded_patches += other.padded_patches;
        self.lle_fallbacks += other.lle_fallbacks;
    }
}

fn assemble_chunk<T: Real>(
    patches: &[Patch<T>],
    n: usize,
    config: &ModelerConfig,
) -> Result<(SparseAccumulator<T>, AssemblyDiagnostics)> {
    let p = patches.first().map_or(0, |x| x.size());
    let mut acc = SparseAccumulator::with_capacity(n, patches.len() * p * p);
    let mut diag = AssemblyDiagnostics::default();
    for patch in patches {
        let (local, flags) = local_energy(patch, config)?;
        scatter_add(&mut acc, patch, local.view())?;
        diag.record(flags);
    }
    Ok((acc, diag))
}

/// Builds the symmetrized alignment matrix.
///
/// Patches are split into `workers` contiguous chunks whose triplets are
/// concatenated in chunk order, so the result is bit-identical for any
/// worker count.
pub fn assemble_alignment<T: Real>(
    patches: &PatchSet<T>,
    config: &ModelerConfig,
    workers: usize,
) -> Result<(AlignmentMatrix<T>, AssemblyDiagnostics)> {
    if patches.patches.is_empty() {
        return Err(Error::invalid("no patches to assemble"));
    }
    let p = patches.patch_size();
    if let Some(bad) = patches.patches.iter().find(|x| x.size() != p) {
        return Err(Error::DimensionMismatch {
            expected: (p, p),
            actual: (bad.size(), bad.size()),
        });
    }
    config.validate(p)?;
    let n = patches.image_pixels;
    let workers = workers.max(1).min(patches.patches.len());
    let parts: Vec<Result<(SparseAccumulator<T>, AssemblyDiagnostics)>> = if workers == 1 {
        vec![assemble_chunk(&patches.patches, n, config)]
    } else {
        let chunk = patches.patches.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = patches
                .patches
                .chunks(chunk)
                .map(|c| scope.spawn(move || assemble_chunk(c, n, config)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("assembly worker panicked"))
                .collect()
        })
    };
    let mut total = SparseAccumulator::new(n);
    let mut diag = AssemblyDiagnostics::default();
    for part in parts {
        let (acc, d) = part?;
        total.append(acc);
        diag.merge(d);
    }
    Ok((total.finalize().symmetrized(), diag))
}

/// `min_A  Aᵀ M' A + bᵀ A` over the unit box.
#[derive(Debug, Clone)]
pub struct QuadraticProblem<T> {
    pub m_prime: AlignmentMatrix<T>,
    pub b: Vec<T>,
    pub lambda: T,
    pub known_mask: Vec<bool>,
    /// Trimap targets; zero where unknown.
    pub known_values: Vec<T>,
}

impl<T: Real> QuadraticProblem<T> {
    /// Plain problem without trimap bookkeeping (every pixel unknown).
    pub fn from_parts(m_prime: CsrMatrix<T>, b: Vec<T>) -> Result<Self> {
        let n = m_prime.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (n, 1),
                actual: (b.len(), 1),
            });
        }
        Ok(Self {
            m_prime,
            b,
            lambda: T::zero(),
            known_mask: vec![false; n],
            known_values: vec![T::zero(); n],
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// No labeled pixel: the energy keeps its constant null direction.
    pub fn is_unconstrained(&self) -> bool {
        !self.known_mask.iter().any(|&k| k)
    }
}

/// Folds `λ Σ_known (α_i − g_i)²` into `(M', b)`: `M' = M + λD`,
/// `b = −2λ g` on known pixels. The constant `λ Σ g_i²` is dropped.
pub fn apply_trimap_prior<T: Real>(
    m: &AlignmentMatrix<T>,
    trimap: &Trimap,
    lambda: T,
) -> Result<QuadraticProblem<T>> {
    let n = m.dim();
    if trimap.labels().len() != n {
        return Err(Error::DimensionMismatch {
            expected: (n, 1),
            actual: (trimap.labels().len(), 1),
        });
    }
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(Error::invalid("prior weight lambda must be > 0"));
    }
    let known_mask: Vec<bool> = trimap.labels().iter().map(|l| l.is_known()).collect();
    let known_values: Vec<T> = trimap
        .labels()
        .iter()
        .map(|l| l.target().unwrap_or(T::zero()))
        .collect();
    let diag: Vec<T> = known_mask
        .iter()
        .map(|&k| if k { lambda } else { T::zero() })
        .collect();
    let two = T::lit(2.0);
    let b = known_mask
        .iter()
        .zip(&known_values)
        .map(|(&k, &g)| if k { -two * lambda * g } else { T::zero() })
        .collect();
    Ok(QuadraticProblem {
        m_prime: m.add_diagonal(&diag),
        b,
        lambda,
        known_mask,
        known_values,
    })
}
