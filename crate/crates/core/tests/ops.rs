mod common;

use common::*;
use proptest::prelude::*;
use quadmat::leaf::{DenseLeaf, LeafConfig, LeafKind, LeafMatrix};
use quadmat::{Matrix, MatrixError, MultiplyVariant, Session};
use quadmat_runtime::ExecMode;

fn upper_entries(n: usize, d: &[f64]) -> Triplets {
    (0..n)
        .flat_map(|j| (0..=j).map(move |i| (i, j)))
        .filter(|&(i, j)| d[i + j * n] != 0.0)
        .map(|(i, j)| (i, j, d[i + j * n]))
        .collect()
}

/// `B Bᵀ + n I` for a sparse random `B`.
fn random_spd(rng: &mut rand_chacha::ChaCha8Rng, n: usize, density: f64) -> Vec<f64> {
    let b = dense_of(n, &random_triplets(rng, n, density));
    let mut a = matmul(n, &b, &transpose(n, &b));
    for i in 0..n {
        a[i + i * n] += n as f64;
    }
    a
}

fn identity(n: usize) -> Triplets {
    (0..n).map(|i| (i, i, 1.0)).collect()
}

#[test]
fn add_examples() {
    for kind in LeafKind::ALL {
        let mut s = session(80, 16, 4, kind, 2);
        let z = s.zero();
        assert!(s.add(&z, &z, 1.0, 1.0).unwrap().is_nil());
        let a = s.from_triplets(&[(1, 2, 3.0), (70, 9, -1.0)]).unwrap();
        assert!(s.add(&a, &a, 1.0, -1.0).unwrap().is_nil());
        let b = s.add(&z, &a, 1.0, 2.0).unwrap();
        assert_eq!(s.get_elements(&b, &[(1, 2), (70, 9)]).unwrap(), vec![6.0, -2.0]);
    }
}

#[test]
fn banded_add_matches_the_oracle() {
    let n = 1024;
    let mut rng = rng(3);
    use rand::Rng;
    let band = |rng: &mut rand_chacha::ChaCha8Rng, b: i64| -> Triplets {
        (0..n as i64)
            .flat_map(|i| (-b..=b).map(move |d| (i, i + d)))
            .filter(|&(_, j)| j >= 0 && j < n as i64)
            .map(|(i, j)| (i as usize, j as usize, rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let (ea, eb) = (band(&mut rng, 10), band(&mut rng, 25));
    let (da, db) = (dense_of(n, &ea), dense_of(n, &eb));
    let want: Vec<f64> = da.iter().zip(&db).map(|(x, y)| 0.5 * x - 3.0 * y).collect();
    for kind in LeafKind::ALL {
        let mut s = session(n, 128, 32, kind, 4);
        let (a, b) = (s.from_triplets(&ea).unwrap(), s.from_triplets(&eb).unwrap());
        let c = s.add(&a, &b, 0.5, -3.0).unwrap();
        assert!(rel_err(&s.to_dense(&c).unwrap(), &want) <= 1e-14);
    }
}

#[test]
fn scaled_identity_examples() {
    for kind in LeafKind::ALL {
        let n = 100;
        let mut s = session(n, 16, 4, kind, 2);
        let z = s.zero();
        let id = s.add_scaled_identity(&z, 1.0).unwrap();
        let st = s.tree_stats(&id).unwrap();
        // One leaf per diagonal tile inside the logical range.
        assert_eq!(st.leaf_chunks as usize, n.div_ceil(16));
        assert_eq!(s.to_dense(&id).unwrap(), dense_of(n, &identity(n)));
        assert_eq!(s.find_unnormalized(&id).unwrap(), None);

        let mut r = rng(9);
        let e = random_triplets(&mut r, n, 0.05);
        let a = s.from_triplets(&e).unwrap();
        assert_eq!(s.add_scaled_identity(&a, 0.0).unwrap().root, a.root);
        let b = s.add_scaled_identity(&a, 2.5).unwrap();
        let (da, db) = (dense_of(n, &e), s.to_dense(&b).unwrap());
        for j in 0..n {
            for i in 0..n {
                let want = da[i + j * n] + if i == j { 2.5 } else { 0.0 };
                assert_eq!(db[i + j * n], want);
            }
        }
    }
}

#[test]
fn identity_is_a_bit_exact_left_factor() {
    for kind in LeafKind::ALL {
        let n = 90;
        let mut s = session(n, 16, 4, kind, 3);
        let mut r = rng(2);
        let e = random_triplets(&mut r, n, 0.1);
        let a = s.from_triplets(&e).unwrap();
        let i = s.from_triplets(&identity(n)).unwrap();
        let c = s.multiply(&i, &a, MultiplyVariant::Regular).unwrap();
        assert_eq!(s.to_dense(&c).unwrap(), s.to_dense(&a).unwrap());
        let is = s.symmetric_from_triplets(&identity(n)).unwrap();
        let c = s.multiply(&is, &a, MultiplyVariant::Symmetric).unwrap();
        assert_eq!(s.to_dense(&c).unwrap(), s.to_dense(&a).unwrap());
        let sq = s.symmetric_square(&is).unwrap();
        assert_eq!(s.to_dense(&sq).unwrap(), dense_of(n, &identity(n)));
    }
}

#[test]
fn nil_factors_give_nil_products() {
    for kind in LeafKind::ALL {
        let mut s = session(64, 16, 4, kind, 2);
        let a = s.from_triplets(&[(0, 1, 1.0)]).unwrap();
        let z = s.zero();
        assert!(s.multiply(&z, &a, MultiplyVariant::Regular).unwrap().is_nil());
        assert!(s.multiply(&a, &z, MultiplyVariant::Regular).unwrap().is_nil());
        assert!(s.rank_k(&z).unwrap().is_nil());
        assert!(s.approximate_multiply(&a, &z, 0.5).unwrap().0.is_nil());
        // A·A is nil here because A has a single off-diagonal entry.
        assert!(s.multiply(&a, &a, MultiplyVariant::Regular).unwrap().is_nil());
    }
}

#[test]
fn random_sparse_product_matches_the_oracle() {
    let n = 512;
    let mut r = rng(512);
    let (ea, eb) = (random_triplets(&mut r, n, 0.02), random_triplets(&mut r, n, 0.02));
    let want = matmul(n, &dense_of(n, &ea), &dense_of(n, &eb));
    for kind in LeafKind::ALL {
        let mut s = session(n, 64, 16, kind, 4);
        let (a, b) = (s.from_triplets(&ea).unwrap(), s.from_triplets(&eb).unwrap());
        let c = s.multiply(&a, &b, MultiplyVariant::Regular).unwrap();
        assert!(rel_err(&s.to_dense(&c).unwrap(), &want) <= 1e-12);
        let r = s.rank_k(&a).unwrap();
        let da = dense_of(n, &ea);
        let want_r = upper(n, &matmul(n, &da, &transpose(n, &da)));
        assert!(rel_err(&s.to_dense(&r).unwrap(), &want_r) <= 1e-12);
    }
}

/// Tile-level reference for `C_ij = A_i0·B_0j + A_i1·B_1j`, first term first,
/// each product and sum rounded on its own.
fn recursive_reference(
    a: &[Option<DenseLeaf>],
    b: &[Option<DenseLeaf>],
    tiles: usize,
    r: usize,
    k: usize,
    c: usize,
    m: usize,
) -> Vec<Option<DenseLeaf>> {
    if m == 1 {
        let p = match (&a[r + k * tiles], &b[k + c * tiles]) {
            (Some(x), Some(y)) => Some(x.multiply(y, false, false).unwrap()).filter(|p| !p.is_zero()),
            _ => None,
        };
        return vec![p];
    }
    let h = m / 2;
    let mut out = vec![None; m * m];
    for i in 0..2 {
        for j in 0..2 {
            let t0 = recursive_reference(a, b, tiles, r + i * h, k, c + j * h, h);
            let t1 = recursive_reference(a, b, tiles, r + i * h, k + h, c + j * h, h);
            for (q, (x, y)) in t0.into_iter().zip(t1).enumerate() {
                let sum = match (x, y) {
                    (Some(x), Some(y)) => Some(x.add(&y, 1.0, 1.0).unwrap()).filter(|s| !s.is_zero()),
                    (x, y) => x.or(y),
                };
                let (qi, qj) = (q % h, q / h);
                out[(i * h + qi) + (j * h + qj) * m] = sum;
            }
        }
    }
    out
}

fn tiles_of(n: usize, leaf: usize, padded: usize, d: &[f64]) -> Vec<Option<DenseLeaf>> {
    let t = padded / leaf;
    let cfg = LeafConfig::new(leaf, 1).unwrap();
    let mut out = vec![None; t * t];
    for tj in 0..t {
        for ti in 0..t {
            let mut e = Vec::new();
            for c in 0..leaf {
                for r in 0..leaf {
                    let (gi, gj) = (ti * leaf + r, tj * leaf + c);
                    if gi < n && gj < n && d[gi + gj * n] != 0.0 {
                        e.push((r, c, d[gi + gj * n]));
                    }
                }
            }
            if !e.is_empty() {
                out[ti + tj * t] = Some(DenseLeaf::from_triplets(&cfg, &e).unwrap());
            }
        }
    }
    out
}

#[test]
fn product_equals_the_two_term_recursion_bit_for_bit() {
    let (n, leaf) = (120, 16);
    let mut r = rng(120);
    let (ea, eb) = (random_triplets(&mut r, n, 0.08), random_triplets(&mut r, n, 0.08));
    let (da, db) = (dense_of(n, &ea), dense_of(n, &eb));
    let mut s = session(n, leaf, 1, LeafKind::Dense, 3);
    let padded = s.params().n_padded;
    let t = padded / leaf;
    let tiles = recursive_reference(
        &tiles_of(n, leaf, padded, &da),
        &tiles_of(n, leaf, padded, &db),
        t,
        0,
        0,
        0,
        t,
    );
    let mut want = vec![0.0; n * n];
    for tj in 0..t {
        for ti in 0..t {
            if let Some(tile) = &tiles[ti + tj * t] {
                for c in 0..leaf {
                    for r in 0..leaf {
                        let (gi, gj) = (ti * leaf + r, tj * leaf + c);
                        if gi < n && gj < n {
                            want[gi + gj * n] = tile.at(r, c);
                        }
                    }
                }
            }
        }
    }
    let (a, b) = (s.from_triplets(&ea).unwrap(), s.from_triplets(&eb).unwrap());
    let c = s.multiply(&a, &b, MultiplyVariant::Regular).unwrap();
    let got = s.to_dense(&c).unwrap();
    assert!(got.iter().zip(&want).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn variants_check_their_operands() {
    let mut s = session(64, 16, 4, LeafKind::BlockSparse, 1);
    let g = s.from_triplets(&[(0, 0, 1.0)]).unwrap();
    let y = s.symmetric_from_triplets(&[(0, 0, 1.0)]).unwrap();
    assert!(s.multiply(&y, &g, MultiplyVariant::Regular).is_err());
    assert!(s.multiply(&g, &g, MultiplyVariant::Symmetric).is_err());
    assert!(s.multiply(&g, &g, MultiplyVariant::SymmetricSquare).is_err());
    assert!(s.inverse_cholesky(&g).is_err());
    assert!(matches!(
        s.approximate_multiply(&g, &g, -1.0),
        Err(MatrixError::NegativeTolerance(_))
    ));
    assert!(matches!(s.truncate(&g, -1.0), Err(MatrixError::NegativeTolerance(_))));
    assert!(s.symmetric_from_triplets(&[(3, 1, 1.0)]).is_err());
    assert!(s.add(&g, &y, 1.0, 1.0).is_err());

    let mut other = session(128, 16, 4, LeafKind::BlockSparse, 1);
    let h = other.from_triplets(&[(0, 0, 1.0)]).unwrap();
    assert!(matches!(
        s.add(&g, &h, 1.0, 1.0),
        Err(MatrixError::ParamsMismatch { .. })
    ));
    assert!(matches!(
        s.multiply(&g, &h, MultiplyVariant::Regular),
        Err(MatrixError::ParamsMismatch { .. })
    ));
}

#[test]
fn truncation_examples() {
    for kind in LeafKind::ALL {
        let n = 200;
        let mut s = session(n, 32, 8, kind, 2);
        let mut r = rng(31);
        let e = random_triplets(&mut r, n, 0.03);
        let d = dense_of(n, &e);
        let a = s.from_triplets(&e).unwrap();
        let (t, removed) = s.truncate(&a, 0.0).unwrap();
        assert_eq!((t.root, removed), (a.root, 0.0));
        assert!(s.truncate(&a, frob(&d)).unwrap().0.is_nil());
        let tau = 0.3 * frob(&d);
        let (t, removed) = s.truncate(&a, tau).unwrap();
        let err = diff_norm(&s.to_dense(&t).unwrap(), &d);
        assert!(err <= tau);
        assert!((err - removed).abs() <= 1e-12 * removed, "{err} vs {removed}");
        assert_eq!(s.find_unnormalized(&t).unwrap(), None);
    }
}

#[test]
fn inverse_cholesky_examples() {
    for kind in LeafKind::ALL {
        let n = 100;
        let mut s = session(n, 16, 4, kind, 2);
        let i = s.symmetric_from_triplets(&identity(n)).unwrap();
        let z = s.inverse_cholesky(&i).unwrap();
        assert_eq!(s.to_dense(&z).unwrap(), dense_of(n, &identity(n)));

        let diag: Triplets = (0..n).map(|i| (i, i, (i + 1) as f64)).collect();
        let a = s.symmetric_from_triplets(&diag).unwrap();
        let z = s.inverse_cholesky(&a).unwrap();
        let z = s.to_dense(&z).unwrap();
        for i in 0..n {
            assert!((z[i + i * n] - 1.0 / ((i + 1) as f64).sqrt()).abs() <= 1e-15);
        }

        let mut bad = diag.clone();
        bad[37].2 = -1.0;
        let a = s.symmetric_from_triplets(&bad).unwrap();
        assert!(matches!(
            s.inverse_cholesky(&a),
            Err(MatrixError::NotPositiveDefinite { index: 37 })
        ));
        let missing: Triplets = diag.iter().copied().filter(|e| e.0 != 70).collect();
        let a = s.symmetric_from_triplets(&missing).unwrap();
        assert!(matches!(
            s.inverse_cholesky(&a),
            Err(MatrixError::NotPositiveDefinite { index: 70 })
        ));
    }
}

#[test]
fn inverse_cholesky_of_random_spd_has_small_residual() {
    let n = 256;
    let mut r = rng(256);
    let a = random_spd(&mut r, n, 0.01);
    for kind in LeafKind::ALL {
        let mut s = session(n, 32, 8, kind, 4);
        let m = s.symmetric_from_triplets(&upper_entries(n, &a)).unwrap();
        let z = s.inverse_cholesky(&m).unwrap();
        let z = s.to_dense(&z).unwrap();
        let mut res = matmul(n, &transpose(n, &z), &matmul(n, &a, &z));
        for i in 0..n {
            res[i + i * n] -= 1.0;
        }
        assert!(frob(&res) <= 1e-8);
    }
}

#[test]
fn zero_tolerance_approximation_is_the_regular_product() {
    for kind in LeafKind::ALL {
        let n = 150;
        let mut s = session(n, 16, 4, kind, 3);
        let mut r = rng(77);
        let (a, b) = (
            s.from_triplets(&random_triplets(&mut r, n, 0.05)).unwrap(),
            s.from_triplets(&random_triplets(&mut r, n, 0.05)).unwrap(),
        );
        let c = s.multiply(&a, &b, MultiplyVariant::Regular).unwrap();
        let (x, pruned) = s.approximate_multiply(&a, &b, 0.0).unwrap();
        assert!(pruned.is_empty());
        assert_eq!(s.canonical_bytes(&x).unwrap(), s.canonical_bytes(&c).unwrap());
        let y = s.multiply(&a, &b, MultiplyVariant::Approximate(0.0)).unwrap();
        assert_eq!(s.canonical_bytes(&y).unwrap(), s.canonical_bytes(&c).unwrap());
    }
}

/// Every operation on `a` (and `b`) as the dense oracle sees it, keyed by name.
fn run_all(s: &mut Session, a: &Matrix, b: &Matrix, sym: &Matrix) -> Vec<(&'static str, Vec<f64>)> {
    let mut out = Vec::new();
    let mut push = |s: &mut Session, name, m: Matrix| out.push((name, s.to_dense(&m).unwrap()));
    let m = s.add(a, b, 0.75, -1.25).unwrap();
    push(s, "add", m);
    let m = s.add_scaled_identity(a, -1.5).unwrap();
    push(s, "add_scaled_identity", m);
    let m = s.multiply(a, b, MultiplyVariant::Regular).unwrap();
    push(s, "multiply", m);
    let m = s.multiply(sym, b, MultiplyVariant::Symmetric).unwrap();
    push(s, "symmetric", m);
    let m = s.symmetric_square(sym).unwrap();
    push(s, "symmetric_square", m);
    let m = s.rank_k(a).unwrap();
    push(s, "rank_k", m);
    let m = s.truncate(a, 0.2).unwrap().0;
    push(s, "truncate", m);
    out
}

fn oracle_all(n: usize, a: &[f64], b: &[f64], sym_upper: &[f64]) -> Vec<Vec<f64>> {
    let sym = symmetrize(n, sym_upper);
    let mut ident = a.to_vec();
    for i in 0..n {
        ident[i + i * n] -= 1.5;
    }
    vec![
        a.iter().zip(b).map(|(x, y)| 0.75 * x - 1.25 * y).collect(),
        ident,
        matmul(n, a, b),
        matmul(n, &sym, b),
        upper(n, &matmul(n, &sym, &sym)),
        upper(n, &matmul(n, a, &transpose(n, a))),
        a.to_vec(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operations_match_dense_oracles(seed in any::<u64>(), n in 1usize..160, density in 0.0..0.15f64, leaf_shift in 2u32..6, kind_idx in 0usize..3) {
        let kind = LeafKind::ALL[kind_idx];
        let leaf = 1 << leaf_shift;
        let mut r = rng(seed);
        let (ea, eb) = (random_triplets(&mut r, n, density), random_triplets(&mut r, n, density));
        let es = upper_entries(n, &upper(n, &dense_of(n, &random_triplets(&mut r, n, density))));
        let mut s = session(n, leaf, leaf.min(4), kind, 3);
        let (a, b, y) = (s.from_triplets(&ea).unwrap(), s.from_triplets(&eb).unwrap(), s.symmetric_from_triplets(&es).unwrap());
        let got = run_all(&mut s, &a, &b, &y);
        let want = oracle_all(n, &dense_of(n, &ea), &dense_of(n, &eb), &dense_of(n, &es));
        for ((name, g), w) in got.iter().zip(&want) {
            if *name == "truncate" {
                prop_assert!(diff_norm(g, w) <= 0.2);
            } else {
                let tol = if *name == "add" || *name == "add_scaled_identity" { 1e-15 } else { 1e-12 };
                prop_assert!(rel_err(g, w) <= tol, "{} error {}", name, rel_err(g, w));
            }
        }
    }

    #[test]
    fn explicit_zero_trees_behave_like_nil(seed in any::<u64>(), n in 1usize..100, kind_idx in 0usize..3) {
        let kind = LeafKind::ALL[kind_idx];
        let mut r = rng(seed);
        let mut s = session(n, 8, 4, kind, 2);
        let a = s.from_triplets(&random_triplets(&mut r, n, 0.1)).unwrap();
        let es = upper_entries(n, &upper(n, &dense_of(n, &random_triplets(&mut r, n, 0.1))));
        let y = s.symmetric_from_triplets(&es).unwrap();
        let (nil, zeros) = (s.zero(), s.explicit_zeros(false).unwrap());
        let (sym_nil, sym_zeros) = (Matrix { symmetric: true, ..nil }, s.explicit_zeros(true).unwrap());
        for (z, zs) in [(nil, sym_nil), (zeros, sym_zeros)] {
            let with_b = run_all(&mut s, &a, &z, &y);
            let with_a = run_all(&mut s, &z, &a, &zs);
            let reference_b = run_all(&mut s, &a, &nil, &y);
            let reference_a = run_all(&mut s, &nil, &a, &sym_nil);
            for ((_, x), (_, w)) in with_b.iter().zip(&reference_b).chain(with_a.iter().zip(&reference_a)) {
                prop_assert!(diff_norm(x, w) <= 1e-15 * frob(w).max(1.0));
            }
        }
    }

    #[test]
    fn symmetric_outputs_are_upper_stored(seed in any::<u64>(), n in 2usize..120) {
        let mut r = rng(seed);
        let mut s = session(n, 16, 4, LeafKind::BlockSparse, 2);
        let a = s.from_triplets(&random_triplets(&mut r, n, 0.1)).unwrap();
        let es = upper_entries(n, &upper(n, &dense_of(n, &random_triplets(&mut r, n, 0.1))));
        let y = s.symmetric_from_triplets(&es).unwrap();
        for m in [s.rank_k(&a).unwrap(), s.symmetric_square(&y).unwrap()] {
            prop_assert!(m.symmetric);
            let d = s.to_dense(&m).unwrap();
            prop_assert_eq!(&upper(n, &d), &d);
            let full = symmetrize(n, &d);
            prop_assert_eq!(&transpose(n, &full), &full);
        }
    }

    #[test]
    fn approximate_error_is_bounded_by_the_pruning_log(seed in any::<u64>(), n in 16usize..200, frac in 0.0..0.5f64) {
        let mut r = rng(seed);
        let mut s = session(n, 8, 4, LeafKind::BlockSparse, 2);
        let (ea, eb) = (random_triplets(&mut r, n, 0.05), random_triplets(&mut r, n, 0.05));
        let (da, db) = (dense_of(n, &ea), dense_of(n, &eb));
        let tau = frac * frob(&da) * frob(&db);
        let (a, b) = (s.from_triplets(&ea).unwrap(), s.from_triplets(&eb).unwrap());
        let (c, pruned) = s.approximate_multiply(&a, &b, tau).unwrap();
        let err = diff_norm(&s.to_dense(&c).unwrap(), &matmul(n, &da, &db));
        let bound: f64 = pruned.iter().sum();
        prop_assert!(err <= bound * (1.0 + 1e-12) + 1e-12 * frob(&matmul(n, &da, &db)), "{} > {}", err, bound);
        prop_assert!(bound <= tau);
    }

    #[test]
    fn truncation_contract_holds(seed in any::<u64>(), n in 1usize..120, frac in 0.0..1.1f64, kind_idx in 0usize..3) {
        let kind = LeafKind::ALL[kind_idx];
        let mut r = rng(seed);
        let mut s = session(n, 16, 4, kind, 1);
        let e = random_triplets(&mut r, n, 0.08);
        let d = dense_of(n, &e);
        let tau = frac * frob(&d);
        let a = s.from_triplets(&e).unwrap();
        let (t, _) = s.truncate(&a, tau).unwrap();
        prop_assert!(diff_norm(&s.to_dense(&t).unwrap(), &d) <= tau);
        prop_assert_eq!(s.find_unnormalized(&t).unwrap(), None);
    }
}

#[test]
fn results_do_not_depend_on_the_schedule() {
    let n = 300;
    let mut r = rng(300);
    let (ea, eb) = (random_triplets(&mut r, n, 0.03), random_triplets(&mut r, n, 0.03));
    let es = upper_entries(n, &random_spd(&mut r, n, 0.005));
    let mut reference: Option<Vec<Vec<u8>>> = None;
    for (workers, mode) in [
        (1, ExecMode::Simulate),
        (3, ExecMode::Simulate),
        (4, ExecMode::Shared),
        (2, ExecMode::Shared),
    ] {
        let mut s = Session::with_kind(
            n,
            LeafConfig::new(32, 8).unwrap(),
            LeafKind::BlockSparse,
            runtime(workers, mode),
        )
        .unwrap();
        let (a, b, y) = (
            s.from_triplets(&ea).unwrap(),
            s.from_triplets(&eb).unwrap(),
            s.symmetric_from_triplets(&es).unwrap(),
        );
        let outs = [
            s.add(&a, &b, 1.0, 2.0).unwrap(),
            s.add_scaled_identity(&a, 3.0).unwrap(),
            s.multiply(&a, &b, MultiplyVariant::Regular).unwrap(),
            s.multiply(&y, &b, MultiplyVariant::Symmetric).unwrap(),
            s.symmetric_square(&y).unwrap(),
            s.rank_k(&a).unwrap(),
            s.approximate_multiply(&a, &b, 0.3).unwrap().0,
            s.truncate(&a, 0.5).unwrap().0,
            s.inverse_cholesky(&y).unwrap(),
        ];
        let bytes: Vec<Vec<u8>> = outs.iter().map(|m| s.canonical_bytes(m).unwrap()).collect();
        match &reference {
            None => reference = Some(bytes),
            Some(r) => assert!(r == &bytes, "{workers} workers in {mode:?} mode differ"),
        }
    }
}
