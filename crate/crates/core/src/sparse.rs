//! Compressed-row sparse matrices and the counting sorts used by the
//! assembly pipelines.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Element type of a [`CsrMatrix`].
pub trait Scalar:
    Copy
    + PartialEq
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const ZERO: Self;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Row-compressed sparse matrix. Entries are sorted by `(row, col)`, unique,
/// and never exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

pub type SparseComplexMatrix = CsrMatrix<Complex64>;
pub type SparseRealMatrix = CsrMatrix<f64>;

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from unordered triplets. Duplicates are summed in
    /// input order; entries that end up exactly zero are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= nrows {
                return Err(Error::IndexOutOfRange {
                    what: "row",
                    index: r,
                    bound: nrows,
                });
            }
            if c >= ncols {
                return Err(Error::IndexOutOfRange {
                    what: "column",
                    index: c,
                    bound: ncols,
                });
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut builder = CsrBuilder::new(nrows, ncols);
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            builder.push(r, c, v);
        }
        Ok(builder.finish())
    }

    /// Builds from a dense row-major closure, keeping the nonzero entries.
    pub fn from_dense_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut builder = CsrBuilder::new(nrows, ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                builder.push(r, c, f(r, c));
            }
        }
        builder.finish()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => T::ZERO,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::ZERO; self.nnz()];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let dst = next[c];
                col_idx[dst] = r;
                values[dst] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        for v in &mut t.values {
            *v = v.conj();
        }
        t
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut builder = CsrBuilder::new(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            builder.push(r, c, alpha * v);
        }
        builder.finish()
    }

    /// Entrywise sum. Panics on shape mismatch.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut builder = CsrBuilder::new(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let mut a = self.row(r).peekable();
            let mut b = other.row(r).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca < cb {
                            builder.push(r, ca, va);
                            a.next();
                        } else if cb < ca {
                            builder.push(r, cb, vb);
                            b.next();
                        } else {
                            builder.push(r, ca, va + vb);
                            a.next();
                            b.next();
                        }
                    }
                    (Some((ca, va)), None) => {
                        builder.push(r, ca, va);
                        a.next();
                    }
                    (None, Some((cb, vb))) => {
                        builder.push(r, cb, vb);
                        b.next();
                    }
                    (None, None) => break,
                }
            }
        }
        builder.finish()
    }

    /// Sparse-sparse product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut builder = CsrBuilder::new(self.nrows, other.ncols);
        let mut acc = vec![T::ZERO; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                builder.push(r, c, acc[c]);
                acc[c] = T::ZERO;
                touched[c] = false;
            }
            cols.clear();
        }
        builder.finish()
    }

    pub fn trace(&self) -> T {
        let mut t = T::ZERO;
        for r in 0..self.nrows.min(self.ncols) {
            t += self.get(r, r);
        }
        t
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::ZERO; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v.to_complex();
        }
        m
    }

    /// Largest `|A_rc - conj(A_cr)|` over the stored entries, with its position.
    pub fn hermiticity_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for (r, c, v) in self.iter() {
            let dev = (v - self.get(c, r).conj()).modulus();
            if dev > worst.0 {
                worst = (dev, r, c);
            }
        }
        worst
    }

    /// Checks Hermiticity with tolerance `tol * max(1, |A_rc|)`.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: self.ncols,
            });
        }
        for (r, c, v) in self.iter() {
            let dev = (v - self.get(c, r).conj()).modulus();
            if dev > tol * v.modulus().max(1.0) {
                return Err(Error::NotHermitian {
                    row: r,
                    col: c,
                    deviation: dev,
                });
            }
        }
        Ok(())
    }
}

impl CsrMatrix<f64> {
    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// `y += alpha * A x`.
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out += alpha * acc;
        }
    }

    /// True when `A^T == -A` holds bit for bit.
    pub fn is_exactly_skew_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.iter().all(|(r, c, v)| self.get(c, r) == -v)
    }

    pub fn max_abs_diff_dense(&self, dense: &DMatrix<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                worst = worst.max((self.get(r, c) - dense[(r, c)]).abs());
            }
        }
        worst
    }

    /// Drops entries with magnitude below `eps`.
    pub fn filter_small(&self, eps: f64) -> Self {
        let mut builder = CsrBuilder::new(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            if v.abs() >= eps {
                builder.push(r, c, v);
            }
        }
        builder.finish()
    }
}

/// Incremental builder for entries arriving in `(row, col)` order.
pub struct CsrBuilder<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    current_row: usize,
}

impl<T: Scalar> CsrBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self::with_capacity(nrows, ncols, 0)
    }

    pub fn with_capacity(nrows: usize, ncols: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
            current_row: 0,
        }
    }

    /// Appends an entry; exact zeros are skipped. Rows must be non-decreasing
    /// and columns strictly increasing within a row.
    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row >= self.current_row && row < self.nrows && col < self.ncols);
        while self.current_row < row {
            self.row_ptr.push(self.col_idx.len());
            self.current_row += 1;
        }
        if value == T::ZERO {
            return;
        }
        debug_assert!(
            self.row_ptr.len() - 1 == row
                && (self.col_idx.len() == self.row_ptr[row] || *self.col_idx.last().unwrap() < col)
        );
        self.col_idx.push(col);
        self.values.push(value);
    }

    pub fn finish(mut self) -> CsrMatrix<T> {
        while self.row_ptr.len() <= self.nrows {
            self.row_ptr.push(self.col_idx.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        }
    }
}

/// Stable counting sort: returns the permutation of `order` sorted by
/// `key(i) < bound`.
pub fn counting_sort_by(order: &[u32], bound: usize, key: impl Fn(u32) -> usize) -> Vec<u32> {
    let mut counts = vec![0usize; bound + 1];
    for &i in order {
        counts[key(i) + 1] += 1;
    }
    for b in 0..bound {
        counts[b + 1] += counts[b];
    }
    let mut out = vec![0u32; order.len()];
    for &i in order {
        let k = key(i);
        out[counts[k]] = i;
        counts[k] += 1;
    }
    out
}

/// Two-pass LSD radix sort on an index pair, stable with respect to the
/// incoming order.
pub fn radix_sort_pairs(
    len: usize,
    bound: usize,
    major: impl Fn(u32) -> usize,
    minor: impl Fn(u32) -> usize,
) -> Vec<u32> {
    let identity: Vec<u32> = (0..len as u32).collect();
    let by_minor = counting_sort_by(&identity, bound, minor);
    counting_sort_by(&by_minor, bound, major)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(
            3,
            3,
            vec![(2, 1, 1.0), (0, 0, 2.0), (2, 1, -1.0), (1, 2, 3.0), (0, 0, 1.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 2), 3.0);
        assert_eq!(m.get(2, 1), 0.0);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        let err = CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
    }

    #[test]
    fn matmul_and_transpose_agree_with_dense() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 1, 2.0), (1, 2, -1.0), (2, 0, 0.5), (1, 1, 4.0)]).unwrap();
        let b = a.transpose();
        let p = a.matmul(&b);
        let dense = a.to_dense_real() * b.to_dense_real();
        assert!(p.max_abs_diff_dense(&dense) < 1e-15);
        assert_eq!(b.get(1, 0), 2.0);
    }

    #[test]
    fn radix_sort_is_stable() {
        let keys = [(2usize, 1usize), (0, 3), (2, 1), (0, 0), (1, 2)];
        let perm = radix_sort_pairs(keys.len(), 4, |i| keys[i as usize].0, |i| keys[i as usize].1);
        assert_eq!(perm, vec![3, 1, 4, 0, 2]);
    }

    #[test]
    fn skew_symmetry_check() {
        let q = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, -2.0)]).unwrap();
        assert!(q.is_exactly_skew_symmetric());
        let p = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        assert!(!p.is_exactly_skew_symmetric());
    }
}
