//! SU(N) structure constants.
//!
//! Everything derives from the triple trace `T(x,y,z) = Tr(F_x F_y F_z)`:
//! `f_xyz = 2 Im T`, `d_xyz = 2 Re T`, and `z_xyz = d_xyz + i f_xyz = 2 T`,
//! the coefficient in `F_x F_y = delta_xy I/N + 1/2 sum_s z_xys F_s`.
//!
//! Off-diagonal generators touch two matrix units and diagonal ones are
//! diagonal, so a triple trace is nonzero only for
//!
//! * three off-diagonal generators whose pairs form a triangle `{a,b,c}`
//!   (f-type for an odd number of `J`s, d-type otherwise),
//! * two generators on the same pair plus one `D(l)` with `l >= a`
//!   (equal kinds give d, mixed kinds give f when additionally `l <= b`;
//!   `d(S01, S01, D1)` and `d(J01, J01, D1)` cancel exactly),
//! * three diagonal generators where the two smallest `l` coincide.
//!
//! Each case is `O(1)`, which gives `O(N^3)` enumeration overall.

use std::cmp::{max, min};

use num_complex::Complex64;

use crate::basis::{diag_weight, GeneratorBasis, GeneratorId, FRAC_1_SQRT_2};
use crate::error::Result;
use crate::sparse::{radix_sort_pairs, Scalar, SparseComplexMatrix};

/// Number of nonzero `f_mns`.
pub fn nz_f(n: usize) -> u64 {
    let n = n as i128;
    (5 * n * n * n - 9 * n * n - 2 * n + 6) as u64
}

/// Number of nonzero `d_mns`.
pub fn nz_d(n: usize) -> u64 {
    let n = n as i128;
    (6 * n * n * n - n * (21 * n + 7) / 2 + 1) as u64
}

/// Which structure constant a tensor holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TensorKind {
    F,
    D,
    Z,
}

impl TensorKind {
    pub fn tag(self) -> char {
        match self {
            TensorKind::F => 'f',
            TensorKind::D => 'd',
            TensorKind::Z => 'z',
        }
    }

    pub fn from_tag(tag: char) -> Option<Self> {
        match tag {
            'f' => Some(TensorKind::F),
            'd' => Some(TensorKind::D),
            'z' => Some(TensorKind::Z),
            _ => None,
        }
    }

    /// Closed-form entry count.
    pub fn expected_nnz(self, n: usize) -> u64 {
        match self {
            TensorKind::F => nz_f(n),
            TensorKind::D => nz_d(n),
            // f and d never share a support.
            TensorKind::Z => nz_f(n) + nz_d(n),
        }
    }
}

/// One nonzero in a tensor slice with fixed first index. Exactly one of
/// `d` and `f` is nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceEntry {
    pub second: usize,
    pub third: usize,
    pub d: f64,
    pub f: f64,
}

impl SliceEntry {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.d, self.f)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    D,
    F,
}

impl GeneratorBasis {
    #[inline]
    fn off_index(&self, j: usize, k: usize, antisym: bool) -> usize {
        if antisym {
            self.antisym_index(j, k)
        } else {
            self.sym_index(j, k)
        }
    }

    /// `Tr(F_x F_y F_z)` in `O(1)`.
    ///
    /// Evaluated once per unordered triple (ascending index order) and mapped
    /// to other orders by `T(odd permutation) = conj(T)`, so the derived `f`
    /// is exactly antisymmetric and `d` exactly symmetric.
    pub fn triple_trace(&self, x: usize, y: usize, z: usize) -> Complex64 {
        let inversions = (x > y) as u8 + (x > z) as u8 + (y > z) as u8;
        let mut s = [x, y, z];
        s.sort_unstable();
        let t = self.raw_triple_trace(s[0], s[1], s[2]);
        if inversions % 2 == 1 {
            t.conj()
        } else {
            t
        }
    }

    fn raw_triple_trace(&self, x: usize, y: usize, z: usize) -> Complex64 {
        let ids = [self.id_unchecked(x), self.id_unchecked(y), self.id_unchecked(z)];
        let diag_count = ids.iter().filter(|g| g.is_diagonal()).count();
        match diag_count {
            0 => {
                let (a, b) = pair_of(ids[0]);
                let mut sum = Complex64::ZERO;
                for (p, q) in [(a, b), (b, a)] {
                    let (c, d) = pair_of(ids[1]);
                    let r = if q == c {
                        d
                    } else if q == d {
                        c
                    } else {
                        continue;
                    };
                    sum += unit_coef(ids[0], p, q) * unit_coef(ids[1], q, r) * unit_coef(ids[2], r, p);
                }
                sum
            }
            1 => {
                // Tr is cyclic: rotate the diagonal generator to the end.
                let pos = ids.iter().position(|g| g.is_diagonal()).unwrap();
                let (o1, o2, dl) = match pos {
                    0 => (ids[1], ids[2], ids[0]),
                    1 => (ids[2], ids[0], ids[1]),
                    _ => (ids[0], ids[1], ids[2]),
                };
                let GeneratorId::Diag { l } = dl else { unreachable!() };
                let (a, b) = pair_of(o1);
                let mut sum = Complex64::ZERO;
                for (p, q) in [(a, b), (b, a)] {
                    let c = unit_coef(o1, p, q) * unit_coef(o2, q, p);
                    sum += c * diag_weight(l, p);
                }
                sum
            }
            2 => Complex64::ZERO,
            _ => {
                let mut ls = ids.map(|g| match g {
                    GeneratorId::Diag { l } => l,
                    _ => unreachable!(),
                });
                ls.sort_unstable();
                let [l0, l1, l2] = ls;
                let value = if l0 == l1 && l1 < l2 {
                    1.0 / ((l2 * (l2 + 1)) as f64).sqrt()
                } else if l0 == l1 && l1 == l2 {
                    -((l0 - 1) as f64) / ((l0 * (l0 + 1)) as f64).sqrt()
                } else {
                    0.0
                };
                Complex64::new(value, 0.0)
            }
        }
    }

    /// Visits every structurally nonzero `z_{first, y, z}`.
    ///
    /// The slice of an off-diagonal generator holds `O(N)` entries and that
    /// of `D(l)` holds `O(l N)` entries.
    pub fn for_each_in_slice(&self, first: usize, visit: impl FnMut(SliceEntry)) {
        self.for_each_in_slice_where(first, |_, _| true, visit);
    }

    /// Like [`for_each_in_slice`](Self::for_each_in_slice), but values are
    /// only evaluated for `(second, third)` pairs accepted by `keep`.
    pub fn for_each_in_slice_where(
        &self,
        first: usize,
        keep: impl Fn(usize, usize) -> bool,
        mut visit: impl FnMut(SliceEntry),
    ) {
        let n = self.n();
        let mut emit = |second: usize, third: usize, part: Part| {
            if !keep(second, third) {
                return;
            }
            let t = self.triple_trace(first, second, third);
            let entry = match part {
                Part::D => SliceEntry {
                    second,
                    third,
                    d: 2.0 * t.re,
                    f: 0.0,
                },
                Part::F => SliceEntry {
                    second,
                    third,
                    d: 0.0,
                    f: 2.0 * t.im,
                },
            };
            visit(entry);
        };
        match self.id_unchecked(first) {
            id @ (GeneratorId::Sym { j: a, k: b } | GeneratorId::Antisym { j: a, k: b }) => {
                let x_antisym = matches!(id, GeneratorId::Antisym { .. });
                for c in 0..n {
                    if c == a || c == b {
                        continue;
                    }
                    let p1 = (min(a, c), max(a, c));
                    let p2 = (min(b, c), max(b, c));
                    for (u, w) in [(p1, p2), (p2, p1)] {
                        for ku in [false, true] {
                            for kw in [false, true] {
                                let odd = (x_antisym as u8 + ku as u8 + kw as u8) % 2 == 1;
                                emit(
                                    self.off_index(u.0, u.1, ku),
                                    self.off_index(w.0, w.1, kw),
                                    if odd { Part::F } else { Part::D },
                                );
                            }
                        }
                    }
                }
                for l in a.max(1)..n {
                    for k2 in [false, true] {
                        let part = if k2 == x_antisym {
                            if l == 1 && b == 1 {
                                continue;
                            }
                            Part::D
                        } else {
                            if l > b {
                                continue;
                            }
                            Part::F
                        };
                        let o2 = self.off_index(a, b, k2);
                        let dl = self.diag_index(l);
                        emit(o2, dl, part);
                        emit(dl, o2, part);
                    }
                }
            }
            GeneratorId::Diag { l } => {
                for a in 0..=l.min(n - 2) {
                    for b in a + 1..n {
                        for k1 in [false, true] {
                            for k2 in [false, true] {
                                let part = if k1 == k2 {
                                    if l == 1 && a == 0 && b == 1 {
                                        continue;
                                    }
                                    Part::D
                                } else {
                                    if l > b {
                                        continue;
                                    }
                                    Part::F
                                };
                                emit(self.off_index(a, b, k1), self.off_index(a, b, k2), part);
                            }
                        }
                    }
                }
                let dl = self.diag_index(l);
                for m in 1..n {
                    let dm = self.diag_index(m);
                    if m == l {
                        if l >= 2 {
                            emit(dl, dl, Part::D);
                        }
                        for q in l + 1..n {
                            emit(dl, self.diag_index(q), Part::D);
                        }
                    } else if m > l {
                        emit(dm, dl, Part::D);
                    } else {
                        emit(dm, dm, Part::D);
                    }
                }
            }
        }
    }

    /// `z_mns = d_mns + i f_mns`, evaluated on the fly.
    pub fn z_entry(&self, m: usize, n: usize, s: usize) -> Complex64 {
        self.triple_trace(m, n, s) * 2.0
    }

    pub fn f_entry(&self, m: usize, n: usize, s: usize) -> f64 {
        2.0 * self.triple_trace(m, n, s).im
    }

    pub fn d_entry(&self, m: usize, n: usize, s: usize) -> f64 {
        2.0 * self.triple_trace(m, n, s).re
    }
}

#[inline]
fn pair_of(g: GeneratorId) -> (usize, usize) {
    match g {
        GeneratorId::Sym { j, k } | GeneratorId::Antisym { j, k } => (j, k),
        GeneratorId::Diag { .. } => unreachable!("diagonal generator has no pair"),
    }
}

/// Coefficient of the matrix unit `E_pq` in an off-diagonal generator.
#[inline]
fn unit_coef(g: GeneratorId, p: usize, q: usize) -> Complex64 {
    match g {
        GeneratorId::Sym { j, k } if (p == j && q == k) || (p == k && q == j) => Complex64::new(FRAC_1_SQRT_2, 0.0),
        GeneratorId::Antisym { j, k } if p == j && q == k => Complex64::new(0.0, -FRAC_1_SQRT_2),
        GeneratorId::Antisym { j, k } if p == k && q == j => Complex64::new(0.0, FRAC_1_SQRT_2),
        _ => Complex64::ZERO,
    }
}

/// Entry order of a [`SparseTensor3`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Unsorted coordinate list.
    Coo,
    /// Stably sorted by the index pair `(major, minor)` (axes 0..3).
    SortedBy(usize, usize),
    /// Sorted by the full triple `(m, n, s)`.
    Lexicographic,
}

/// Rank-3 sparse tensor over the `M` generator indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseTensor3<V> {
    n: usize,
    kind: TensorKind,
    indices: Vec<[u32; 3]>,
    values: Vec<V>,
    layout: Layout,
}

impl<V: Scalar> SparseTensor3<V> {
    pub fn from_parts(n: usize, kind: TensorKind, indices: Vec<[u32; 3]>, values: Vec<V>, layout: Layout) -> Self {
        assert_eq!(indices.len(), values.len());
        Self {
            n,
            kind,
            indices,
            values,
            layout,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Axis length `M = N^2 - 1`.
    pub fn dim(&self) -> usize {
        self.n * self.n - 1
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indices(&self) -> &[[u32; 3]] {
        &self.indices
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = ([u32; 3], V)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Stable counting sort on the index pair `(major, minor)`,
    /// `O(nnz + M)`.
    pub fn sort_entries(self, major: usize, minor: usize) -> Self {
        assert!(major < 3 && minor < 3 && major != minor);
        let perm = radix_sort_pairs(
            self.indices.len(),
            self.dim(),
            |i| self.indices[i as usize][major] as usize,
            |i| self.indices[i as usize][minor] as usize,
        );
        self.permuted(&perm, Layout::SortedBy(major, minor))
    }

    /// Dictionary sort on `(m, n, s)`.
    pub fn sort_lexicographic(self) -> Self {
        if self.layout == Layout::Lexicographic {
            return self;
        }
        let mut perm: Vec<u32> = (0..self.indices.len() as u32).collect();
        perm.sort_unstable_by_key(|&i| self.indices[i as usize]);
        self.permuted(&perm, Layout::Lexicographic)
    }

    fn permuted(self, perm: &[u32], layout: Layout) -> Self {
        let indices = perm.iter().map(|&i| self.indices[i as usize]).collect();
        let values = perm.iter().map(|&i| self.values[i as usize]).collect();
        Self {
            n: self.n,
            kind: self.kind,
            indices,
            values,
            layout,
        }
    }

    /// Whether the entries are sorted by `(m, n, s)` without duplicates.
    pub fn is_strictly_lexicographic(&self) -> bool {
        self.indices.windows(2).all(|w| w[0] < w[1])
    }

    /// Entry counts of every 2D section with index `axis` fixed.
    pub fn section_counts(&self, axis: usize) -> Vec<usize> {
        let mut counts = vec![0; self.dim()];
        for idx in &self.indices {
            counts[idx[axis] as usize] += 1;
        }
        counts
    }
}

/// Materializes the nonzero `f_mns` by slice enumeration, in `O(N^3)`.
pub fn f_nonzeros(basis: &GeneratorBasis) -> SparseTensor3<f64> {
    collect_tensor(basis, TensorKind::F, |e| (e.f != 0.0).then_some(e.f))
}

/// Materializes the nonzero `d_mns`.
pub fn d_nonzeros(basis: &GeneratorBasis) -> SparseTensor3<f64> {
    collect_tensor(basis, TensorKind::D, |e| (e.d != 0.0).then_some(e.d))
}

fn collect_tensor(
    basis: &GeneratorBasis,
    kind: TensorKind,
    select: impl Fn(&SliceEntry) -> Option<f64>,
) -> SparseTensor3<f64> {
    let expected = kind.expected_nnz(basis.n()) as usize;
    let mut indices = Vec::with_capacity(expected);
    let mut values = Vec::with_capacity(expected);
    for first in 0..basis.m() {
        basis.for_each_in_slice(first, |e| {
            if let Some(v) = select(&e) {
                indices.push([first as u32, e.second as u32, e.third as u32]);
                values.push(v);
            }
        });
    }
    SparseTensor3::from_parts(basis.n(), kind, indices, values, Layout::Coo)
}

/// `Z = D + i F`, merged from the two tensors after a dictionary sort.
pub fn merge_z(f: SparseTensor3<f64>, d: SparseTensor3<f64>) -> SparseTensor3<Complex64> {
    assert_eq!(f.n(), d.n());
    let n = f.n();
    let f = f.sort_lexicographic();
    let d = d.sort_lexicographic();
    let mut indices = Vec::with_capacity(f.nnz() + d.nnz());
    let mut values = Vec::with_capacity(f.nnz() + d.nnz());
    let (mut i, mut j) = (0, 0);
    while i < f.nnz() || j < d.nnz() {
        let fi = f.indices.get(i);
        let dj = d.indices.get(j);
        match (fi, dj) {
            (Some(a), Some(b)) if a == b => {
                indices.push(*a);
                values.push(Complex64::new(d.values[j], f.values[i]));
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => {
                indices.push(*a);
                values.push(Complex64::new(0.0, f.values[i]));
                i += 1;
            }
            (Some(a), None) => {
                indices.push(*a);
                values.push(Complex64::new(0.0, f.values[i]));
                i += 1;
            }
            (_, Some(b)) => {
                indices.push(*b);
                values.push(Complex64::new(d.values[j], 0.0));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    SparseTensor3::from_parts(n, TensorKind::Z, indices, values, Layout::Lexicographic)
}

/// `f` and `z` tensors held in memory in dictionary order, as consumed by
/// the materialized assembly pipeline.
#[derive(Clone, Debug)]
pub struct MaterializedTensors {
    pub f: SparseTensor3<f64>,
    pub z: SparseTensor3<Complex64>,
}

impl MaterializedTensors {
    pub fn build(basis: &GeneratorBasis) -> Self {
        let f = f_nonzeros(basis).sort_lexicographic();
        let z = merge_z(f.clone(), d_nonzeros(basis));
        Self { f, z }
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }
}

/// Trace-formula evaluation of `f` and `d` by explicit sparse matrix
/// products; the validation oracle for the enumeration.
pub struct BruteForce {
    generators: Vec<SparseComplexMatrix>,
}

impl BruteForce {
    pub fn new(basis: &GeneratorBasis) -> Result<Self> {
        let generators = (0..basis.m()).map(|s| basis.generator(s)).collect::<Result<Vec<_>>>()?;
        Ok(Self { generators })
    }

    pub fn generators(&self) -> &[SparseComplexMatrix] {
        &self.generators
    }

    /// `-i Tr(F_s [F_m, F_n])`.
    pub fn f(&self, m: usize, n: usize, s: usize) -> f64 {
        let comm = self.commutator(m, n);
        (Complex64::new(0.0, -1.0) * self.trace_with(s, &comm)).re
    }

    /// `Tr(F_s {F_m, F_n})`.
    pub fn d(&self, m: usize, n: usize, s: usize) -> f64 {
        let anti = self.anticommutator(m, n);
        self.trace_with(s, &anti).re
    }

    pub fn commutator(&self, m: usize, n: usize) -> SparseComplexMatrix {
        let a = &self.generators[m];
        let b = &self.generators[n];
        a.matmul(b).add(&b.matmul(a).scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn anticommutator(&self, m: usize, n: usize) -> SparseComplexMatrix {
        let a = &self.generators[m];
        let b = &self.generators[n];
        a.matmul(b).add(&b.matmul(a))
    }

    /// `Tr(F_s X)`, summing over the stored entries of `X`.
    pub fn trace_with(&self, s: usize, x: &SparseComplexMatrix) -> Complex64 {
        let g = &self.generators[s];
        x.iter().map(|(r, c, v)| g.get(c, r) * v).sum()
    }
}

pub fn brute_force_f(basis: &GeneratorBasis, m: usize, n: usize, s: usize) -> Result<f64> {
    let fm = basis.generator(m)?;
    let fn_ = basis.generator(n)?;
    let fs = basis.generator(s)?;
    let comm = fm.matmul(&fn_).add(&fn_.matmul(&fm).scale(Complex64::new(-1.0, 0.0)));
    let tr: Complex64 = fs.matmul(&comm).trace();
    Ok((Complex64::new(0.0, -1.0) * tr).re)
}

pub fn brute_force_d(basis: &GeneratorBasis, m: usize, n: usize, s: usize) -> Result<f64> {
    let fm = basis.generator(m)?;
    let fn_ = basis.generator(n)?;
    let fs = basis.generator(s)?;
    let anti = fm.matmul(&fn_).add(&fn_.matmul(&fm));
    Ok(fs.matmul(&anti).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_counts_small() {
        assert_eq!(nz_f(2), 6);
        assert_eq!(nz_d(2), 0);
        assert_eq!(nz_f(3), 54);
        assert_eq!(nz_d(3), 58);
    }

    #[test]
    fn su2_f_tensor() {
        let b = GeneratorBasis::new(2).unwrap();
        let f = f_nonzeros(&b);
        assert_eq!(f.nnz(), 6);
        assert_eq!(d_nonzeros(&b).nnz(), 0);
        let sym = b.index_of(GeneratorId::Sym { j: 0, k: 1 }).unwrap();
        let anti = b.index_of(GeneratorId::Antisym { j: 0, k: 1 }).unwrap();
        let diag = b.index_of(GeneratorId::Diag { l: 1 }).unwrap();
        assert_abs_diff_eq!(b.f_entry(sym, anti, diag), std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            brute_force_f(&b, sym, anti, diag).unwrap(),
            std::f64::consts::SQRT_2,
            epsilon = 1e-15
        );
        for (_, v) in f.iter() {
            assert_abs_diff_eq!(v.abs(), std::f64::consts::SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn su3_counts_and_spot_value() {
        let b = GeneratorBasis::new(3).unwrap();
        assert_eq!(f_nonzeros(&b).nnz(), 54);
        assert_eq!(d_nonzeros(&b).nnz(), 58);
        let s01 = b.index_of(GeneratorId::Sym { j: 0, k: 1 }).unwrap();
        let d2 = b.index_of(GeneratorId::Diag { l: 2 }).unwrap();
        let expected = (2.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(b.d_entry(s01, s01, d2), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(brute_force_d(&b, s01, s01, d2).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn repeated_index_has_no_f() {
        let b = GeneratorBasis::new(4).unwrap();
        for m in 0..b.m() {
            for s in 0..b.m() {
                assert_eq!(b.f_entry(m, m, s), 0.0);
                let z = b.z_entry(m, m, s);
                assert_eq!(z.im, 0.0);
            }
        }
    }

    #[test]
    fn su2_z_is_imaginary() {
        let b = GeneratorBasis::new(2).unwrap();
        for m in 0..3 {
            for n in 0..3 {
                for s in 0..3 {
                    assert_eq!(b.z_entry(m, n, s).re, 0.0);
                }
            }
        }
    }

    #[test]
    fn sort_reverse_tensor() {
        let indices: Vec<[u32; 3]> = (0..10u32).rev().map(|i| [i % 3, i % 5, i]).collect();
        let values: Vec<f64> = (0..10).map(|i| i as f64 + 1.0).collect();
        let t = SparseTensor3::from_parts(4, TensorKind::F, indices, values, Layout::Coo);
        let sorted = t.clone().sort_entries(0, 1);
        let keys: Vec<_> = sorted.indices().iter().map(|i| (i[0], i[1])).collect();
        assert!(keys.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(sorted.layout(), Layout::SortedBy(0, 1));
        let again = sorted.clone().sort_entries(0, 1);
        assert_eq!(again.indices(), sorted.indices());
        assert_eq!(again.values(), sorted.values());
    }

    #[test]
    fn su3_f_sorted_by_s_then_m() {
        let b = GeneratorBasis::new(3).unwrap();
        let f = f_nonzeros(&b).sort_entries(2, 0);
        assert_eq!(f.nnz(), 54);
        let keys: Vec<_> = f.indices().iter().map(|i| (i[2], i[0])).collect();
        assert!(keys.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn merged_z_matches_on_the_fly() {
        let b = GeneratorBasis::new(4).unwrap();
        let t = MaterializedTensors::build(&b);
        assert_eq!(t.z.nnz() as u64, TensorKind::Z.expected_nnz(4));
        for (idx, v) in t.z.iter() {
            let [m, n, s] = idx.map(|i| i as usize);
            assert_eq!(b.z_entry(m, n, s), v);
        }
    }
}
