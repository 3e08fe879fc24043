//! Compilation of a Lindblad model into the real Bloch equation
//! `dv/dt = (Q0 + theta(t) Q1 + R) v + K`.
//!
//! With `H = sum_m h_m F_m` and channels `gamma (L rho L^+ - 1/2 {L^+ L, rho})`,
//! `L = sum_j l_j F_j`:
//!
//! * `q_sn = sum_m f_mns h_m`
//! * `k_s  = (i gamma / N) sum_jk l_j conj(l_k) f_jks`
//! * `r_sm = -gamma sum_q Re(Z''_qm F''_qs)` with
//!   `F''_qs = sum_k conj(l_k) f_kqs` and `Z''_qm = sum_j l_j zp_jqm`,
//!   `zp = (f + i d) / 2`.
//!
//! Two interchangeable tensor sources feed the same code: a materialized,
//! dictionary-sorted `f`/`z` pair (the literal COO, sort and sum pipeline)
//! and on-the-fly slice enumeration, which streams one `O(N)`/`O(lN)` slice
//! at a time. Every sum runs over the same terms in the same order in both
//! modes, so their results agree bit for bit.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{GeneratorBasis, SparseCoefficients};
use crate::error::{Error, Result};
use crate::sparse::{radix_sort_pairs, CsrBuilder, CsrMatrix, SparseRealMatrix};
use crate::structure::{MaterializedTensors, SparseTensor3};

/// `H(t) = H0 + theta(t) H1` in generator coordinates.
#[derive(Clone, Debug)]
pub struct HamiltonianDecomposition {
    pub h0: SparseCoefficients<f64>,
    pub h1: SparseCoefficients<f64>,
}

impl HamiltonianDecomposition {
    pub fn from_matrices(basis: &GeneratorBasis, h0: &CsrMatrix<Complex64>, h1: &CsrMatrix<Complex64>) -> Result<Self> {
        Ok(Self {
            h0: basis.expand_hermitian(h0)?,
            h1: basis.expand_hermitian(h1)?,
        })
    }
}

/// One Lindblad channel `rate * D[L]`.
#[derive(Clone, Debug)]
pub struct DissipatorChannel {
    pub l: SparseCoefficients<Complex64>,
    pub rate: f64,
}

impl DissipatorChannel {
    pub fn from_matrix(basis: &GeneratorBasis, l: &CsrMatrix<Complex64>, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "rate",
                reason: format!("must be finite and non-negative, got {rate}"),
            });
        }
        Ok(Self {
            l: basis.expand_general(l)?,
            rate,
        })
    }
}

/// Where structure constants come from during assembly.
#[derive(Clone, Copy, Debug)]
pub enum TensorSource<'a> {
    OnTheFly,
    Materialized(&'a MaterializedTensors),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompileOptions {
    /// Entries of the final operators with `|x| < epsilon` are dropped.
    pub epsilon: f64,
    /// Whether the channel rate multiplies `K`. Off reproduces the variant
    /// written without the rate.
    pub k_includes_rate: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            k_includes_rate: true,
        }
    }
}

/// Sizes and timings gathered during assembly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompileStats {
    /// Unsummed `F'` entries per channel.
    pub f_prime_nnz: Vec<usize>,
    /// Unsummed `Z'` entries per channel.
    pub z_prime_nnz: Vec<usize>,
    /// Entries of the summed `F''` per channel.
    pub f_summed_nnz: Vec<usize>,
    /// Entries of the summed `Z''` per channel.
    pub z_summed_nnz: Vec<usize>,
    pub elapsed: Duration,
}

/// The compiled real-valued equation of motion for the coherence vector.
#[derive(Clone, Debug)]
pub struct CompiledBloch {
    pub n: usize,
    pub q0: SparseRealMatrix,
    pub q1: SparseRealMatrix,
    pub r: SparseRealMatrix,
    pub k: Vec<f64>,
    pub stats: CompileStats,
}

impl CompiledBloch {
    /// Length of the coherence vector, `N^2 - 1`.
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn total_nnz(&self) -> usize {
        self.q0.nnz() + self.q1.nnz() + self.r.nnz()
    }
}

pub fn compile(
    basis: &GeneratorBasis,
    hamiltonian: &HamiltonianDecomposition,
    channels: &[DissipatorChannel],
    source: TensorSource<'_>,
    options: CompileOptions,
) -> Result<CompiledBloch> {
    let start = Instant::now();
    let m = basis.m();
    basis.check_len(hamiltonian.h0.len())?;
    basis.check_len(hamiltonian.h1.len())?;
    for ch in channels {
        basis.check_len(ch.l.len())?;
    }
    if let TensorSource::Materialized(t) = source {
        if t.n() != basis.n() {
            return Err(Error::DimensionMismatch {
                expected: basis.n(),
                found: t.n(),
            });
        }
    }

    let (q0, q1) = rayon::join(
        || assemble_q(basis, &hamiltonian.h0, source),
        || assemble_q(basis, &hamiltonian.h1, source),
    );

    let per_channel: Vec<(Vec<f64>, ChannelR)> = channels
        .par_iter()
        .map(|ch| {
            let k = assemble_k(basis, ch, source, options.k_includes_rate);
            (k, assemble_r(basis, ch, source))
        })
        .collect();

    let mut k = vec![0.0; m];
    let mut r = SparseRealMatrix::zeros(m, m);
    let mut stats = CompileStats::default();
    for (kc, rc) in per_channel {
        for (a, b) in k.iter_mut().zip(&kc) {
            *a += b;
        }
        r = r.add(&rc.r);
        stats.f_prime_nnz.push(rc.f_prime_nnz);
        stats.z_prime_nnz.push(rc.z_prime_nnz);
        stats.f_summed_nnz.push(rc.f_summed_nnz);
        stats.z_summed_nnz.push(rc.z_summed_nnz);
    }

    let (q0, q1, r) = if options.epsilon > 0.0 {
        for v in k.iter_mut() {
            if v.abs() < options.epsilon {
                *v = 0.0;
            }
        }
        (
            q0.filter_small(options.epsilon),
            q1.filter_small(options.epsilon),
            r.filter_small(options.epsilon),
        )
    } else {
        (q0, q1, r)
    };
    stats.elapsed = start.elapsed();
    Ok(CompiledBloch {
        n: basis.n(),
        q0,
        q1,
        r,
        k,
        stats,
    })
}

/// Start offsets of each first-index block in a dictionary-sorted tensor.
fn block_offsets<V: crate::sparse::Scalar>(t: &SparseTensor3<V>) -> Vec<usize> {
    let m = t.dim();
    let mut offsets = vec![0usize; m + 1];
    for idx in t.indices() {
        offsets[idx[0] as usize + 1] += 1;
    }
    for i in 0..m {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

/// Sums consecutive entries sharing a key, in input order. Exact zeros are
/// dropped.
fn sum_runs<K: PartialEq + Copy, V: Copy + std::ops::AddAssign + PartialEq + Default>(
    items: impl IntoIterator<Item = (K, V)>,
    mut emit: impl FnMut(K, V),
) {
    let mut current: Option<(K, V)> = None;
    for (key, v) in items {
        match current.as_mut() {
            Some((k, acc)) if *k == key => *acc += v,
            _ => {
                if let Some((k, acc)) = current.take() {
                    if acc != V::default() {
                        emit(k, acc);
                    }
                }
                current = Some((key, v));
            }
        }
    }
    if let Some((k, acc)) = current {
        if acc != V::default() {
            emit(k, acc);
        }
    }
}

/// `q_sn = sum_m f_mns h_m`.
pub fn assemble_q(basis: &GeneratorBasis, h: &SparseCoefficients<f64>, source: TensorSource<'_>) -> SparseRealMatrix {
    let m = basis.m();
    match source {
        TensorSource::Materialized(t) => {
            let offsets = block_offsets(&t.f);
            let mut rows = Vec::new();
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            for (mi, hm) in h.iter() {
                for e in offsets[mi]..offsets[mi + 1] {
                    let [_, n, s] = t.f.indices()[e];
                    rows.push(s);
                    cols.push(n);
                    vals.push(t.f.values()[e] * hm);
                }
            }
            let perm = radix_sort_pairs(
                vals.len(),
                m,
                |i| rows[i as usize] as usize,
                |i| cols[i as usize] as usize,
            );
            let mut b = CsrBuilder::new(m, m);
            sum_runs(
                perm.iter().map(|&i| {
                    let i = i as usize;
                    ((rows[i], cols[i]), vals[i])
                }),
                |(r, c), v| b.push(r as usize, c as usize, v),
            );
            b.finish()
        }
        TensorSource::OnTheFly => {
            let rows: Vec<Vec<(usize, f64)>> = (0..m)
                .into_par_iter()
                .map(|s| {
                    // f_mns = f_smn: row s is the slice of s.
                    let mut items: Vec<(usize, usize, f64)> = Vec::new();
                    basis.for_each_in_slice_where(
                        s,
                        |mi, _| h.is_nonzero(mi),
                        |e| {
                            if e.f != 0.0 {
                                items.push((e.third, e.second, e.f * h.get(e.second)));
                            }
                        },
                    );
                    items.sort_unstable_by_key(|&(n, mi, _)| (n, mi));
                    let mut row = Vec::new();
                    sum_runs(items.into_iter().map(|(n, _, v)| (n, v)), |n, v| row.push((n, v)));
                    row
                })
                .collect();
            let mut b = CsrBuilder::with_capacity(m, m, rows.iter().map(Vec::len).sum());
            for (s, row) in rows.into_iter().enumerate() {
                for (n, v) in row {
                    b.push(s, n, v);
                }
            }
            b.finish()
        }
    }
}

/// `k_s = -(2 rate / N) sum_{j<k} Im(l_j conj(l_k)) f_jks`, the real form
/// of `(i rate / N) sum_jk l_j conj(l_k) f_jks`.
pub fn assemble_k(
    basis: &GeneratorBasis,
    channel: &DissipatorChannel,
    source: TensorSource<'_>,
    include_rate: bool,
) -> Vec<f64> {
    let m = basis.m();
    let l = &channel.l;
    let weight = |j: usize, k: usize| (l.get(j) * l.get(k).conj()).im;
    let mut acc = vec![0.0; m];
    match source {
        TensorSource::Materialized(t) => {
            let offsets = block_offsets(&t.f);
            for (j, _) in l.iter() {
                for e in offsets[j]..offsets[j + 1] {
                    let [_, k, s] = t.f.indices()[e];
                    let k = k as usize;
                    if k > j && l.is_nonzero(k) {
                        acc[s as usize] += weight(j, k) * t.f.values()[e];
                    }
                }
            }
            // Dictionary order visits (j, k) ascending for every s, as does
            // the streamed branch; only the outer loop differs.
        }
        TensorSource::OnTheFly => {
            acc.par_iter_mut().enumerate().for_each(|(s, out)| {
                let mut items: Vec<(usize, usize, f64)> = Vec::new();
                let keep = |j: usize, k: usize| j < k && l.is_nonzero(j) && l.is_nonzero(k);
                basis.for_each_in_slice_where(s, keep, |e| {
                    if e.f != 0.0 {
                        items.push((e.second, e.third, e.f));
                    }
                });
                items.sort_unstable_by_key(|&(j, k, _)| (j, k));
                for (j, k, f) in items {
                    *out += weight(j, k) * f;
                }
            });
        }
    }
    let rate = if include_rate { channel.rate } else { 1.0 };
    let scale = -2.0 * rate / basis.n() as f64;
    for v in acc.iter_mut() {
        *v *= scale;
    }
    acc
}

/// Summed F'' and Z'' entries of one row, with the pre-summing counts.
type RowParts = (Vec<(usize, Complex64)>, Vec<(usize, Complex64)>, usize, usize);

#[inline]
fn zp(d: f64, f: f64) -> Complex64 {
    Complex64::new(0.5 * f, 0.5 * d)
}

/// Dissipative matrix of one channel with its intermediate sizes.
#[derive(Clone, Debug)]
pub struct ChannelR {
    pub r: SparseRealMatrix,
    pub f_prime_nnz: usize,
    pub z_prime_nnz: usize,
    pub f_summed_nnz: usize,
    pub z_summed_nnz: usize,
}

pub fn assemble_r(basis: &GeneratorBasis, channel: &DissipatorChannel, source: TensorSource<'_>) -> ChannelR {
    let m = basis.m();
    let l = &channel.l;
    let (fpp, zpp, f_nnz, z_nnz) = match source {
        TensorSource::Materialized(t) => {
            // F'_(k,q,s) = conj(l_k) f_kqs, generated in ascending k.
            let f_off = block_offsets(&t.f);
            let mut f_prime: Vec<([u32; 2], Complex64)> = Vec::new();
            for (k, lk) in l.iter() {
                for e in f_off[k]..f_off[k + 1] {
                    let [_, q, s] = t.f.indices()[e];
                    f_prime.push(([q, s], lk.conj() * t.f.values()[e]));
                }
            }
            let z_off = block_offsets(&t.z);
            let mut z_prime: Vec<([u32; 2], Complex64)> = Vec::new();
            for (j, lj) in l.iter() {
                for e in z_off[j]..z_off[j + 1] {
                    let [_, q, mm] = t.z.indices()[e];
                    let z = t.z.values()[e];
                    z_prime.push(([q, mm], lj * zp(z.re, z.im)));
                }
            }
            let (f_nnz, z_nnz) = (f_prime.len(), z_prime.len());
            (sum_coo(m, f_prime), sum_coo(m, z_prime), f_nnz, z_nnz)
        }
        TensorSource::OnTheFly => {
            // f_kqs = f_qsk and zp_jqm = zp_qmj: everything for row q of F''
            // and Z'' sits in the slice of q.
            let rows: Vec<RowParts> = (0..m)
                .into_par_iter()
                .map(|q| {
                    let mut fi: Vec<(usize, usize, Complex64)> = Vec::new();
                    let mut zi: Vec<(usize, usize, Complex64)> = Vec::new();
                    basis.for_each_in_slice_where(
                        q,
                        |_, j| l.is_nonzero(j),
                        |e| {
                            let j = e.third;
                            let lj = l.get(j);
                            if e.f != 0.0 {
                                fi.push((e.second, j, lj.conj() * e.f));
                            }
                            zi.push((e.second, j, lj * zp(e.d, e.f)));
                        },
                    );
                    let counts = (fi.len(), zi.len());
                    fi.sort_unstable_by_key(|&(a, b, _)| (a, b));
                    zi.sort_unstable_by_key(|&(a, b, _)| (a, b));
                    let mut frow = Vec::new();
                    sum_runs(fi.into_iter().map(|(s, _, v)| (s, v)), |s, v| frow.push((s, v)));
                    let mut zrow = Vec::new();
                    sum_runs(zi.into_iter().map(|(s, _, v)| (s, v)), |s, v| zrow.push((s, v)));
                    (frow, zrow, counts.0, counts.1)
                })
                .collect();
            let mut fb = CsrBuilder::new(m, m);
            let mut zb = CsrBuilder::new(m, m);
            let (mut f_nnz, mut z_nnz) = (0, 0);
            for (q, (frow, zrow, fc, zc)) in rows.into_iter().enumerate() {
                for (s, v) in frow {
                    fb.push(q, s, v);
                }
                for (mm, v) in zrow {
                    zb.push(q, mm, v);
                }
                f_nnz += fc;
                z_nnz += zc;
            }
            (fb.finish(), zb.finish(), f_nnz, z_nnz)
        }
    };
    ChannelR {
        r: contract_r(&fpp, &zpp, channel.rate),
        f_prime_nnz: f_nnz,
        z_prime_nnz: z_nnz,
        f_summed_nnz: fpp.nnz(),
        z_summed_nnz: zpp.nnz(),
    }
}

/// Stable sort of `(q, x)`-keyed COO entries followed by duplicate summation.
fn sum_coo(m: usize, entries: Vec<([u32; 2], Complex64)>) -> CsrMatrix<Complex64> {
    let perm = radix_sort_pairs(
        entries.len(),
        m,
        |i| entries[i as usize].0[0] as usize,
        |i| entries[i as usize].0[1] as usize,
    );
    let mut b = CsrBuilder::new(m, m);
    sum_runs(perm.iter().map(|&i| entries[i as usize]), |[q, x], v| {
        b.push(q as usize, x as usize, v)
    });
    b.finish()
}

/// `r_sm = -rate sum_q Re(F''_qs Z''_qm)`, row by row with a dense
/// accumulator. Terms are added in ascending `q` for every `(s, m)`.
fn contract_r(fpp: &CsrMatrix<Complex64>, zpp: &CsrMatrix<Complex64>, rate: f64) -> SparseRealMatrix {
    let m = fpp.nrows();
    let ft = fpp.transpose();
    let rows: Vec<Vec<(usize, f64)>> = (0..m)
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; m], vec![false; m], Vec::<usize>::new()),
            |(acc, seen, touched), s| {
                for (q, f) in ft.row(s) {
                    for (mm, z) in zpp.row(q) {
                        if !seen[mm] {
                            seen[mm] = true;
                            touched.push(mm);
                        }
                        acc[mm] += (f * z).re;
                    }
                }
                touched.sort_unstable();
                let mut row = Vec::with_capacity(touched.len());
                for &mm in touched.iter() {
                    let v = acc[mm];
                    if v != 0.0 {
                        row.push((mm, -rate * v));
                    }
                    acc[mm] = 0.0;
                    seen[mm] = false;
                }
                touched.clear();
                row
            },
        )
        .collect();
    let mut b = CsrBuilder::with_capacity(m, m, rows.iter().map(Vec::len).sum());
    for (s, row) in rows.into_iter().enumerate() {
        for (mm, v) in row {
            b.push(s, mm, v);
        }
    }
    b.finish()
}
