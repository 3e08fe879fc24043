//! Orthonormal traceless Hermitian generator basis of SU(N).
//!
//! Generators are indexed canonically: the `N(N-1)/2` symmetric generators
//! `S(j,k)` in lexicographic `(j,k)` order, then the antisymmetric `J(j,k)`
//! in the same order, then the diagonal `D(l)` for `l = 1..N-1`. Matrix rows
//! `j < k` are 0-based; `l` counts the leading diagonal entries of `D(l)`.
//!
//! ```text
//! S(j,k) = (E_jk + E_kj) / sqrt(2)
//! J(j,k) = -i (E_jk - E_kj) / sqrt(2)
//! D(l)   = (E_00 + ... + E_{l-1,l-1} - l E_ll) / sqrt(l (l+1))
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::{CsrBuilder, CsrMatrix, Scalar, SparseComplexMatrix};

pub(crate) const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub(crate) const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Identifies one generator of SU(N).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorId {
    Sym { j: usize, k: usize },
    Antisym { j: usize, k: usize },
    Diag { l: usize },
}

impl GeneratorId {
    pub fn is_diagonal(self) -> bool {
        matches!(self, GeneratorId::Diag { .. })
    }
}

/// Canonical SU(N) basis. Immutable and cheap to share.
#[derive(Clone, Debug)]
pub struct GeneratorBasis {
    n: usize,
    pairs: Vec<(u32, u32)>,
    row_offsets: Vec<usize>,
}

impl GeneratorBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("basis dimension must be at least 2, got {n}"),
            });
        }
        if n > 46_000 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("dimension {n} overflows 32-bit generator indices"),
            });
        }
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        let mut row_offsets = Vec::with_capacity(n);
        for j in 0..n {
            row_offsets.push(pairs.len());
            for k in j + 1..n {
                pairs.push((j as u32, k as u32));
            }
        }
        Ok(Self { n, pairs, row_offsets })
    }

    /// Matrix dimension `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of generators `M = N^2 - 1`.
    pub fn m(&self) -> usize {
        self.n * self.n - 1
    }

    /// Number of off-diagonal pairs, `N(N-1)/2`.
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub(crate) fn pair_index(&self, j: usize, k: usize) -> usize {
        self.row_offsets[j] + (k - j - 1)
    }

    #[inline]
    pub(crate) fn pair(&self, p: usize) -> (usize, usize) {
        let (j, k) = self.pairs[p];
        (j as usize, k as usize)
    }

    #[inline]
    pub(crate) fn sym_index(&self, j: usize, k: usize) -> usize {
        self.pair_index(j, k)
    }

    #[inline]
    pub(crate) fn antisym_index(&self, j: usize, k: usize) -> usize {
        self.pairs.len() + self.pair_index(j, k)
    }

    #[inline]
    pub(crate) fn diag_index(&self, l: usize) -> usize {
        2 * self.pairs.len() + l - 1
    }

    pub fn index_of(&self, id: GeneratorId) -> Result<usize> {
        let n = self.n;
        let check_pair = |j: usize, k: usize| -> Result<()> {
            if k >= n {
                return Err(Error::IndexOutOfRange {
                    what: "generator row",
                    index: k,
                    bound: n,
                });
            }
            if j >= k {
                return Err(Error::InvalidParameter {
                    name: "generator",
                    reason: format!("off-diagonal generator needs j < k, got ({j}, {k})"),
                });
            }
            Ok(())
        };
        match id {
            GeneratorId::Sym { j, k } => {
                check_pair(j, k)?;
                Ok(self.sym_index(j, k))
            }
            GeneratorId::Antisym { j, k } => {
                check_pair(j, k)?;
                Ok(self.antisym_index(j, k))
            }
            GeneratorId::Diag { l } => {
                if l == 0 || l >= n {
                    return Err(Error::IndexOutOfRange {
                        what: "diagonal generator",
                        index: l,
                        bound: n,
                    });
                }
                Ok(self.diag_index(l))
            }
        }
    }

    pub fn id_of(&self, index: usize) -> Result<GeneratorId> {
        if index >= self.m() {
            return Err(Error::IndexOutOfRange {
                what: "generator",
                index,
                bound: self.m(),
            });
        }
        Ok(self.id_unchecked(index))
    }

    #[inline]
    pub(crate) fn id_unchecked(&self, index: usize) -> GeneratorId {
        let p = self.pairs.len();
        if index < p {
            let (j, k) = self.pair(index);
            GeneratorId::Sym { j, k }
        } else if index < 2 * p {
            let (j, k) = self.pair(index - p);
            GeneratorId::Antisym { j, k }
        } else {
            GeneratorId::Diag { l: index - 2 * p + 1 }
        }
    }

    /// Explicit sparse matrix of a generator.
    pub fn generator_matrix(&self, id: GeneratorId) -> Result<SparseComplexMatrix> {
        self.index_of(id)?;
        let n = self.n;
        let mut b = CsrBuilder::new(n, n);
        match id {
            GeneratorId::Sym { j, k } => {
                b.push(j, k, Complex64::new(FRAC_1_SQRT_2, 0.0));
                b.push(k, j, Complex64::new(FRAC_1_SQRT_2, 0.0));
            }
            GeneratorId::Antisym { j, k } => {
                b.push(j, k, Complex64::new(0.0, -FRAC_1_SQRT_2));
                b.push(k, j, Complex64::new(0.0, FRAC_1_SQRT_2));
            }
            GeneratorId::Diag { l } => {
                for c in 0..=l {
                    b.push(c, c, Complex64::new(diag_weight(l, c), 0.0));
                }
            }
        }
        Ok(b.finish())
    }

    /// Generator matrix by canonical index.
    pub fn generator(&self, index: usize) -> Result<SparseComplexMatrix> {
        self.generator_matrix(self.id_of(index)?)
    }

    /// Real coefficients `a_s = Tr(F_s A)` of a Hermitian matrix. The trace
    /// part of `A` is not represented; it is recovered as `Tr(A)/N`.
    ///
    /// Runs in `O(nnz(A) + N)`: each off-diagonal entry feeds one `S` and one
    /// `J` coefficient, and the diagonal ones are prefix sums.
    pub fn expand_hermitian(&self, a: &SparseComplexMatrix) -> Result<SparseCoefficients<f64>> {
        self.check_square(a)?;
        a.check_hermitian(1e-12)?;
        let n = self.n;
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        let mut diag = vec![0.0; n];
        for (r, c, v) in a.iter() {
            if r == c {
                diag[r] = v.re;
                continue;
            }
            let upper = if r < c {
                v
            } else if a.get(c, r) == Complex64::ZERO {
                v.conj()
            } else {
                continue;
            };
            let (j, k) = (r.min(c), r.max(c));
            pairs.push((self.sym_index(j, k), SQRT_2 * upper.re));
            pairs.push((self.antisym_index(j, k), -SQRT_2 * upper.im));
        }
        self.push_diagonal_coefficients(&diag, &mut pairs);
        Ok(SparseCoefficients::from_pairs(self.m(), pairs))
    }

    /// Complex coefficients `l_s = Tr(F_s A)` of a traceless matrix.
    pub fn expand_general(&self, a: &SparseComplexMatrix) -> Result<SparseCoefficients<Complex64>> {
        self.check_square(a)?;
        let trace = a.trace();
        if trace.norm() > 1e-10 {
            return Err(Error::NonzeroTrace { trace });
        }
        let n = self.n;
        let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let i_half = Complex64::new(0.0, FRAC_1_SQRT_2);
        let mut pairs: Vec<(usize, Complex64)> = Vec::new();
        let mut diag = vec![Complex64::ZERO; n];
        for (r, c, v) in a.iter() {
            if r == c {
                diag[r] = v;
            } else if r < c {
                pairs.push((self.sym_index(r, c), half * v));
                pairs.push((self.antisym_index(r, c), i_half * v));
            } else {
                pairs.push((self.sym_index(c, r), half * v));
                pairs.push((self.antisym_index(c, r), -i_half * v));
            }
        }
        self.push_diagonal_coefficients(&diag, &mut pairs);
        Ok(SparseCoefficients::from_pairs(self.m(), pairs))
    }

    fn push_diagonal_coefficients<T: Scalar + std::ops::Mul<f64, Output = T>>(
        &self,
        diag: &[T],
        out: &mut Vec<(usize, T)>,
    ) {
        let mut prefix = T::ZERO;
        for l in 1..self.n {
            prefix += diag[l - 1];
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let coef = (prefix - diag[l] * l as f64) * norm;
            out.push((self.diag_index(l), coef));
        }
    }

    /// Projection `Tr(F_s A)` of a dense matrix onto every generator.
    pub fn project_dense(&self, a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.nrows(),
            });
        }
        let m = self.m();
        let mut out = vec![Complex64::ZERO; m];
        let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let i_half = Complex64::new(0.0, FRAC_1_SQRT_2);
        for p in 0..self.pairs.len() {
            let (j, k) = self.pair(p);
            out[p] = half * (a[(j, k)] + a[(k, j)]);
            out[self.pairs.len() + p] = i_half * (a[(j, k)] - a[(k, j)]);
        }
        let diag: Vec<Complex64> = (0..self.n).map(|c| a[(c, c)]).collect();
        let mut tail = Vec::new();
        self.push_diagonal_coefficients(&diag, &mut tail);
        for (s, v) in tail {
            out[s] = v;
        }
        Ok(out)
    }

    /// `rho = I/N + sum_s v_s F_s` as a dense matrix.
    pub fn reconstruct_density(&self, v: &[f64]) -> Result<DMatrix<Complex64>> {
        self.check_len(v.len())?;
        let n = self.n;
        let p = self.pairs.len();
        let mut rho = DMatrix::<Complex64>::zeros(n, n);
        for q in 0..p {
            let (j, k) = self.pair(q);
            let s = v[q] * FRAC_1_SQRT_2;
            let a = v[p + q] * FRAC_1_SQRT_2;
            // S contributes s to both triangles, J contributes -i a above and +i a below.
            rho[(j, k)] = Complex64::new(s, -a);
            rho[(k, j)] = Complex64::new(s, a);
        }
        let diag = self.diagonal_from_coherence(v);
        for c in 0..n {
            rho[(c, c)] = Complex64::new(diag[c], 0.0);
        }
        Ok(rho)
    }

    /// Diagonal of `rho` from the `D(l)` components, in `O(N)` with suffix sums.
    pub(crate) fn diagonal_from_coherence(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let base = 2 * self.pairs.len();
        let mut out = vec![1.0 / n as f64; n];
        let mut suffix = 0.0;
        for c in (0..n).rev() {
            // Generators D(l) with l > c carry weight 1/sqrt(l(l+1)) at position c.
            out[c] += suffix;
            if c >= 1 {
                let norm = 1.0 / ((c * (c + 1)) as f64).sqrt();
                out[c] -= c as f64 * norm * v[base + c - 1];
                suffix += norm * v[base + c - 1];
            }
        }
        out
    }

    fn check_square<T: Scalar>(&self, a: &CsrMatrix<T>) -> Result<()> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: if a.nrows() != self.n { a.nrows() } else { a.ncols() },
            });
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Entry of `D(l)` at diagonal position `c`.
#[inline]
pub(crate) fn diag_weight(l: usize, c: usize) -> f64 {
    let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
    if c < l {
        norm
    } else if c == l {
        -(l as f64) * norm
    } else {
        0.0
    }
}

/// Sparse coefficient list over the generators.
///
/// Values live in a compact array; `slot` maps every generator to its
/// position there or `-1`, so zero checks are `O(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCoefficients<T> {
    values: Vec<T>,
    generators: Vec<u32>,
    slot: Vec<i32>,
}

impl<T: Scalar> SparseCoefficients<T> {
    /// Collects `(generator, value)` pairs; repeated generators are summed in
    /// input order and exact zeros are dropped.
    pub fn from_pairs(m: usize, mut pairs: Vec<(usize, T)>) -> Self {
        pairs.sort_by_key(|&(s, _)| s);
        let mut values = Vec::with_capacity(pairs.len());
        let mut generators = Vec::with_capacity(pairs.len());
        let mut iter = pairs.into_iter().peekable();
        while let Some((s, mut v)) = iter.next() {
            while let Some(&(s2, v2)) = iter.peek() {
                if s2 != s {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != T::ZERO {
                generators.push(s as u32);
                values.push(v);
            }
        }
        let mut slot = vec![-1i32; m];
        for (i, &s) in generators.iter().enumerate() {
            slot[s as usize] = i as i32;
        }
        Self {
            values,
            generators,
            slot,
        }
    }

    pub fn from_dense(values: &[T]) -> Self {
        Self::from_pairs(values.len(), values.iter().copied().enumerate().collect())
    }

    pub fn zeros(m: usize) -> Self {
        Self::from_pairs(m, Vec::new())
    }

    /// Number of generators `M`.
    pub fn len(&self) -> usize {
        self.slot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn get(&self, s: usize) -> T {
        match self.slot[s] {
            -1 => T::ZERO,
            i => self.values[i as usize],
        }
    }

    #[inline]
    pub fn is_nonzero(&self, s: usize) -> bool {
        self.slot[s] >= 0
    }

    /// Nonzero `(generator, value)` pairs in ascending generator order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.generators
            .iter()
            .map(|&s| s as usize)
            .zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::ZERO; self.len()];
        for (s, v) in self.iter() {
            out[s] = v;
        }
        out
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self::from_pairs(self.len(), self.iter().map(|(s, v)| (s, alpha * v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dense(m: &SparseComplexMatrix) -> DMatrix<Complex64> {
        m.to_dense()
    }

    #[test]
    fn su2_diagonal_generator() {
        let b = GeneratorBasis::new(2).unwrap();
        let d = dense(&b.generator_matrix(GeneratorId::Diag { l: 1 }).unwrap());
        assert_abs_diff_eq!(d[(0, 0)].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(d[(1, 1)].re, -FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn su2_symmetric_generator_is_scaled_pauli_x() {
        let b = GeneratorBasis::new(2).unwrap();
        let s = b.generator_matrix(GeneratorId::Sym { j: 0, k: 1 }).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(0, 1), Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_eq!(s.get(1, 0), Complex64::new(FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn su3_second_diagonal_generator() {
        let b = GeneratorBasis::new(3).unwrap();
        let d = dense(&b.generator_matrix(GeneratorId::Diag { l: 2 }).unwrap());
        let r6 = 6f64.sqrt();
        assert_abs_diff_eq!(d[(0, 0)].re, 1.0 / r6, epsilon = 1e-15);
        assert_abs_diff_eq!(d[(1, 1)].re, 1.0 / r6, epsilon = 1e-15);
        assert_abs_diff_eq!(d[(2, 2)].re, -2.0 / r6, epsilon = 1e-15);
    }

    #[test]
    fn generator_nonzero_counts() {
        let b = GeneratorBasis::new(6).unwrap();
        for s in 0..b.m() {
            let g = b.generator(s).unwrap();
            match b.id_of(s).unwrap() {
                GeneratorId::Diag { l } => assert_eq!(g.nnz(), l + 1),
                _ => assert_eq!(g.nnz(), 2),
            }
        }
    }

    #[test]
    fn invalid_ids_are_rejected() {
        let b = GeneratorBasis::new(3).unwrap();
        assert!(b.index_of(GeneratorId::Sym { j: 1, k: 1 }).is_err());
        assert!(b.index_of(GeneratorId::Antisym { j: 0, k: 3 }).is_err());
        assert!(b.index_of(GeneratorId::Diag { l: 0 }).is_err());
        assert!(b.index_of(GeneratorId::Diag { l: 3 }).is_err());
        assert!(b.id_of(8).is_err());
        assert!(GeneratorBasis::new(1).is_err());
    }

    #[test]
    fn canonical_order() {
        let b = GeneratorBasis::new(3).unwrap();
        let ids: Vec<_> = (0..b.m()).map(|s| b.id_of(s).unwrap()).collect();
        assert_eq!(ids[0], GeneratorId::Sym { j: 0, k: 1 });
        assert_eq!(ids[2], GeneratorId::Sym { j: 1, k: 2 });
        assert_eq!(ids[3], GeneratorId::Antisym { j: 0, k: 1 });
        assert_eq!(ids[6], GeneratorId::Diag { l: 1 });
        assert_eq!(ids[7], GeneratorId::Diag { l: 2 });
    }

    #[test]
    fn pauli_z_expands_onto_diagonal() {
        let b = GeneratorBasis::new(2).unwrap();
        let z = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, Complex64::new(1.0, 0.0)), (1, 1, Complex64::new(-1.0, 0.0))],
        )
        .unwrap();
        let c = b.expand_hermitian(&z).unwrap();
        assert_eq!(c.nnz(), 1);
        assert_abs_diff_eq!(c.get(2), SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn generator_expands_to_unit_vector() {
        let b = GeneratorBasis::new(4).unwrap();
        let f7 = b.generator(7).unwrap();
        let c = b.expand_hermitian(&f7).unwrap();
        for s in 0..b.m() {
            let expected = if s == 7 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(c.get(s), expected, epsilon = 1e-15);
        }
        let g = b.expand_general(&b.generator(3).unwrap()).unwrap();
        for s in 0..b.m() {
            let expected = if s == 3 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(g.get(s).re, expected, epsilon = 1e-15);
            assert_abs_diff_eq!(g.get(s).im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lowering_unit_expands_into_s_and_j() {
        let b = GeneratorBasis::new(2).unwrap();
        let g12 = CsrMatrix::from_triplets(2, 2, vec![(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
        let c = b.expand_general(&g12).unwrap();
        assert_abs_diff_eq!(c.get(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c.get(1).im, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c.get(1).re, 0.0, epsilon = 1e-15);
        assert!(!c.is_nonzero(2));
    }

    #[test]
    fn non_hermitian_rejected() {
        let b = GeneratorBasis::new(2).unwrap();
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(b.expand_hermitian(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn traceful_general_matrix_rejected_with_trace() {
        let b = GeneratorBasis::new(2).unwrap();
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, Complex64::new(0.5, 0.0))]).unwrap();
        match b.expand_general(&a) {
            Err(Error::NonzeroTrace { trace }) => assert_eq!(trace.re, 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_vector_is_maximally_mixed() {
        let b = GeneratorBasis::new(4).unwrap();
        let rho = b.reconstruct_density(&vec![0.0; b.m()]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = if r == c { 0.25 } else { 0.0 };
                assert_abs_diff_eq!(rho[(r, c)].re, expected, epsilon = 1e-15);
                assert_abs_diff_eq!(rho[(r, c)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn bloch_north_pole() {
        let b = GeneratorBasis::new(2).unwrap();
        let rho = b.reconstruct_density(&[0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        assert_abs_diff_eq!(rho[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[(1, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wrong_length_rejected() {
        let b = GeneratorBasis::new(3).unwrap();
        assert!(b.reconstruct_density(&[0.0; 3]).is_err());
    }

    #[test]
    fn coefficient_slots() {
        let c = SparseCoefficients::from_pairs(5, vec![(3, 2.0), (1, 1.0), (3, -2.0), (4, 0.5)]);
        assert_eq!(c.nnz(), 2);
        assert!(!c.is_nonzero(3));
        assert!(c.is_nonzero(1));
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![(1, 1.0), (4, 0.5)]);
    }
}
