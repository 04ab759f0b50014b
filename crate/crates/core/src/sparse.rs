//! Compressed sparse row storage for the global alignment energy.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Triplet accumulator. Duplicates are merged in insertion order at
/// [`finalize`](SparseAccumulator::finalize), so the same insertion
/// sequence always yields bit-identical sums.
#[derive(Debug, Clone)]
pub struct SparseAccumulator<T> {
    n: usize,
    triplets: Vec<(usize, usize, T)>,
}

impl<T: Real> SparseAccumulator<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            triplets: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, row: usize, col: usize, value: T) -> Result<()> {
        for idx in [row, col] {
            if idx >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    n: self.n,
                });
            }
        }
        self.triplets.push((row, col, value));
        Ok(())
    }

    /// Appends another accumulator's entries after this one's.
    pub fn append(&mut self, mut other: SparseAccumulator<T>) {
        debug_assert_eq!(self.n, other.n);
        self.triplets.append(&mut other.triplets);
    }

    pub fn finalize(mut self) -> CsrMatrix<T> {
        // stable: equal keys keep insertion order
        self.triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            n: self.n,
            indptr,
            indices,
            values,
        }
    }
}

/// Square CSR matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn from_dense(n: usize, dense: &[T]) -> Self {
        assert_eq!(dense.len(), n * n);
        let mut acc = SparseAccumulator::new(n);
        for r in 0..n {
            for c in 0..n {
                let v = dense[r * n + c];
                if v != T::zero() {
                    acc.triplets.push((r, c, v));
                }
            }
        }
        acc.finalize()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n * self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                d[r * self.n + c] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let slot = next[c];
                indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            n: self.n,
            indptr: counts,
            indices,
            values,
        }
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let t = self.transpose();
        let half = T::lit(0.5);
        let mut acc = SparseAccumulator::with_capacity(self.n, 2 * self.nnz());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                acc.triplets.push((r, c, v * half));
            }
            for (c, v) in t.row(r) {
                acc.triplets.push((r, c, v * half));
            }
        }
        acc.finalize()
    }

    /// Adds `diag[i]` to entry `(i, i)`.
    pub fn add_diagonal(&self, diag: &[T]) -> Self {
        assert_eq!(diag.len(), self.n);
        let mut acc = SparseAccumulator::with_capacity(self.n, self.nnz() + self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                acc.triplets.push((r, c, v));
            }
            if diag[r] != T::zero() {
                acc.triplets.push((r, r, diag[r]));
            }
        }
        acc.finalize()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<T>())
            .fold(T::zero(), |a, b| a.max(b))
    }

    fn mul_rows(&self, x: &[T], rows: std::ops::Range<usize>, out: &mut [T]) {
        for (slot, r) in out.iter_mut().zip(rows) {
            let mut acc = T::zero();
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *slot = acc;
        }
    }

    /// `y = self · x`. Rows are split across up to `workers` threads; every
    /// row sum is computed the same way regardless of the split.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T], workers: usize) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let workers = workers.max(1).min(self.n.max(1));
        if workers == 1 || self.nnz() < 50_000 {
            self.mul_rows(x, 0..self.n, y);
            return;
        }
        let chunk = self.n.div_ceil(workers);
        std::thread::scope(|scope| {
            for (i, out) in y.chunks_mut(chunk).enumerate() {
                let start = i * chunk;
                scope.spawn(move || self.mul_rows(x, start..start + out.len(), out));
            }
        });
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut y, 1);
        y
    }

    /// Matrix Market coordinate dump (1-based indices, general storage).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:e}", r + 1, c + 1, v.to_f64_lossy())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_merge_in_order() {
        let mut acc = SparseAccumulator::new(3);
        acc.add(0, 1, 1.0).unwrap();
        acc.add(2, 0, 4.0).unwrap();
        acc.add(0, 1, 2.0).unwrap();
        let m = acc.finalize();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(2, 0), 4.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn out_of_range_rejected() {
        let mut acc = SparseAccumulator::<f64>::new(2);
        assert!(matches!(
            acc.add(2, 0, 1.0),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn symmetrize_and_transpose() {
        let m = CsrMatrix::from_dense(2, &[1.0, 2.0, 0.0, 3.0]);
        assert_eq!(m.transpose().to_dense(), vec![1.0, 0.0, 2.0, 3.0]);
        let s = m.symmetrized();
        assert!(s.is_symmetric());
        assert_eq!(s.to_dense(), vec![1.0, 1.0, 1.0, 3.0]);
        assert_eq!(m.norm_inf(), 3.0);
    }

    #[test]
    fn threaded_matvec_matches_serial() {
        let n = 400;
        let mut acc = SparseAccumulator::new(n);
        for r in 0..n {
            for c in r.saturating_sub(150)..(r + 150).min(n) {
                acc.add(r, c, ((r * 7 + c * 3) % 11) as f64 - 5.0).unwrap();
            }
        }
        let m = acc.finalize();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut y1 = vec![0.0; n];
        let mut y4 = vec![0.0; n];
        m.mul_vec_into(&x, &mut y1, 1);
        m.mul_vec_into(&x, &mut y4, 4);
        assert_eq!(y1, y4);
    }

    #[test]
    fn matrix_market_header() {
        let m = CsrMatrix::from_dense(2, &[1.0, 0.0, 0.0, 2.0]);
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real general"));
        assert_eq!(lines.next(), Some("2 2 2"));
        assert_eq!(lines.next(), Some("1 1 1e0"));
    }
}
