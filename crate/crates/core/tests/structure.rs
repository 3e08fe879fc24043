use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sunbloch::basis::GeneratorBasis;
use sunbloch::structure::{brute_force_d, d_nonzeros, f_nonzeros, merge_z, nz_d, nz_f, BruteForce, SparseTensor3};

#[test]
fn closed_form_counts_up_to_64() {
    assert_eq!((nz_f(2), nz_d(2)), (6, 0));
    assert_eq!((nz_f(3), nz_d(3)), (54, 58));
    for n in 2..=64 {
        let basis = GeneratorBasis::new(n).unwrap();
        assert_eq!(f_nonzeros(&basis).nnz() as u64, nz_f(n), "f at N={n}");
        assert_eq!(d_nonzeros(&basis).nnz() as u64, nz_d(n), "d at N={n}");
    }
}

fn dense_table(t: &SparseTensor3<f64>, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m * m];
    for (i, v) in t.iter() {
        out[(i[0] as usize * m + i[1] as usize) * m + i[2] as usize] = v;
    }
    out
}

#[test]
fn enumeration_matches_trace_formula_exhaustively() {
    for n in 2..=6 {
        let basis = GeneratorBasis::new(n).unwrap();
        let m = basis.m();
        let brute = BruteForce::new(&basis).unwrap();
        let f = dense_table(&f_nonzeros(&basis), m);
        let d = dense_table(&d_nonzeros(&basis), m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let k = (a * m + b) * m + c;
                    assert!((f[k] - brute.f(a, b, c)).abs() < 1e-12, "f N={n} ({a},{b},{c})");
                    assert!((d[k] - brute.d(a, b, c)).abs() < 1e-12, "d N={n} ({a},{b},{c})");
                }
            }
        }
    }
}

#[test]
fn enumeration_matches_trace_formula_sampled() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [7, 8] {
        let basis = GeneratorBasis::new(n).unwrap();
        let m = basis.m();
        let brute = BruteForce::new(&basis).unwrap();
        let f = dense_table(&f_nonzeros(&basis), m);
        let d = dense_table(&d_nonzeros(&basis), m);
        // Every listed entry, plus a random sample of all triples.
        for (i, v) in f_nonzeros(&basis).iter() {
            assert!((v - brute.f(i[0] as usize, i[1] as usize, i[2] as usize)).abs() < 1e-12);
        }
        for (i, v) in d_nonzeros(&basis).iter() {
            assert!((v - brute.d(i[0] as usize, i[1] as usize, i[2] as usize)).abs() < 1e-12);
        }
        for _ in 0..20_000 {
            let (a, b, c) = (rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m));
            let k = (a * m + b) * m + c;
            assert!((f[k] - brute.f(a, b, c)).abs() < 1e-12);
            assert!((d[k] - brute.d(a, b, c)).abs() < 1e-12);
        }
    }
}

#[test]
fn permutation_symmetry_is_exact() {
    let basis = GeneratorBasis::new(6).unwrap();
    for (i, v) in f_nonzeros(&basis).iter() {
        let [a, b, c] = i.map(|x| x as usize);
        assert_eq!(basis.f_entry(b, a, c), -v);
        assert_eq!(basis.f_entry(a, c, b), -v);
        assert_eq!(basis.f_entry(c, a, b), v);
    }
    for (i, v) in d_nonzeros(&basis).iter() {
        let [a, b, c] = i.map(|x| x as usize);
        assert_eq!(basis.d_entry(b, a, c), v);
        assert_eq!(basis.d_entry(c, b, a), v);
    }
}

#[test]
fn spot_values() {
    let b3 = GeneratorBasis::new(3).unwrap();
    // Sym(1,2) is index 0, Diag(2) is the last index.
    let want = (2.0f64 / 3.0).sqrt();
    assert!((b3.d_entry(0, 0, 7) - want).abs() < 1e-15);
    assert!((brute_force_d(&b3, 0, 0, 7).unwrap() - want).abs() < 1e-15);
    let b2 = GeneratorBasis::new(2).unwrap();
    assert!((b2.f_entry(0, 1, 2) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn commutators_and_anticommutators_reconstruct() {
    let n = 4;
    let basis = GeneratorBasis::new(n).unwrap();
    let brute = BruteForce::new(&basis).unwrap();
    let m = basis.m();
    let gens: Vec<_> = (0..m).map(|s| basis.generator(s).unwrap().to_dense()).collect();
    for a in 0..m {
        for b in 0..m {
            let mut comm = nalgebra::DMatrix::<Complex64>::zeros(n, n);
            let mut anti = nalgebra::DMatrix::<Complex64>::zeros(n, n);
            if a == b {
                anti += nalgebra::DMatrix::identity(n, n) * Complex64::new(2.0 / n as f64, 0.0);
            }
            for (s, g) in gens.iter().enumerate() {
                comm += g * Complex64::new(0.0, basis.f_entry(a, b, s));
                anti += g * Complex64::new(basis.d_entry(a, b, s), 0.0);
            }
            let ec = (&comm - brute.commutator(a, b).to_dense())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let ea = (&anti - brute.anticommutator(a, b).to_dense())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(ec < 1e-12 && ea < 1e-12, "({a},{b}) {ec:e} {ea:e}");
        }
    }
}

#[test]
fn slices_cover_the_merged_tensor() {
    let basis = GeneratorBasis::new(5).unwrap();
    let z = merge_z(
        f_nonzeros(&basis).sort_lexicographic(),
        d_nonzeros(&basis).sort_lexicographic(),
    );
    let mut from_slices = Vec::new();
    for first in 0..basis.m() {
        let mut row = Vec::new();
        basis.for_each_in_slice(first, |e| {
            assert!((e.d == 0.0) != (e.f == 0.0));
            row.push(([first as u32, e.second as u32, e.third as u32], e.z()));
        });
        row.sort_by_key(|r| r.0);
        from_slices.extend(row);
    }
    let merged: Vec<_> = z.iter().collect();
    assert_eq!(from_slices, merged);
}

#[test]
fn sections_have_at_most_order_n_squared_entries() {
    // Every slice with a fixed index holds O(N) entries on average; the
    // densest slice is bounded by a small multiple of N^2.
    for n in [8, 16, 24] {
        let basis = GeneratorBasis::new(n).unwrap();
        let f = f_nonzeros(&basis);
        for axis in 0..3 {
            let counts = f.section_counts(axis);
            assert_eq!(counts.iter().sum::<usize>(), f.nnz());
            assert!(*counts.iter().max().unwrap() <= 6 * n * n, "N={n} axis {axis}");
        }
    }
}

#[test]
fn sorting_is_idempotent() {
    let basis = GeneratorBasis::new(4).unwrap();
    let once = f_nonzeros(&basis).sort_entries(2, 0);
    let twice = once.clone().sort_entries(2, 0);
    assert_eq!(once.indices(), twice.indices());
    assert_eq!(once.values(), twice.values());
    assert!(once
        .indices()
        .windows(2)
        .all(|w| (w[0][2], w[0][0]) <= (w[1][2], w[1][0])));
}
