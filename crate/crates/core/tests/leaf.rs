mod common;

use std::collections::HashMap;

use common::{dense_of, diff_norm, frob, rel_err, transpose};
use proptest::prelude::*;
use quadmat::leaf::{BlockSparseLeaf, DenseLeaf, HierarchicalLeaf, LeafConfig, LeafError, LeafMatrix};

const N: usize = 32;

fn cfg() -> LeafConfig {
    LeafConfig::new(N, 8).unwrap()
}

fn oracle_product(a: &[f64], ta: bool, b: &[f64], tb: bool) -> Vec<f64> {
    let a = if ta { transpose(N, a) } else { a.to_vec() };
    let b = if tb { transpose(N, b) } else { b.to_vec() };
    common::matmul(N, &a, &b)
}

fn block_norms_from_values<L: LeafMatrix>(leaf: &L) -> Vec<f64> {
    let d = leaf.to_dense();
    let bs = leaf.config().block_size;
    let g = N / bs;
    let mut out = Vec::new();
    for bj in 0..g {
        for bi in 0..g {
            let mut s = 0.0;
            for c in 0..bs {
                for r in 0..bs {
                    s += d.at(bi * bs + r, bj * bs + c).powi(2);
                }
            }
            out.push(s.sqrt());
        }
    }
    out
}

/// Entries clustered into a few blocks so block kinds see real sparsity.
fn entries() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    let block = (0..4usize, 0..4usize);
    prop::collection::vec(block, 1..6).prop_flat_map(|blocks| {
        let per = prop::collection::vec((0..8usize, 0..8usize, -1.0..1.0f64), 0..20);
        prop::collection::vec(per, blocks.len()).prop_map(move |groups| {
            groups
                .into_iter()
                .zip(&blocks)
                .flat_map(|(g, &(bi, bj))| g.into_iter().map(move |(r, c, v)| (bi * 8 + r, bj * 8 + c, v)))
                .collect()
        })
    })
}

fn all_kinds(e: &[(usize, usize, f64)]) -> (DenseLeaf, BlockSparseLeaf, HierarchicalLeaf) {
    (
        DenseLeaf::from_triplets(&cfg(), e).unwrap(),
        BlockSparseLeaf::from_triplets(&cfg(), e).unwrap(),
        HierarchicalLeaf::from_triplets(&cfg(), e).unwrap(),
    )
}

fn check_coherent(b: &BlockSparseLeaf) {
    let g = N / b.block_size();
    for bj in 0..g {
        for bi in 0..g {
            let stored = b.norm_grid()[bi + bj * g];
            match b.block(bi, bj) {
                Some(block) => {
                    assert!(block.iter().any(|&x| x != 0.0), "stored all-zero block ({bi},{bj})");
                    let fresh = frob(block);
                    assert!(
                        (stored - fresh).abs() <= 1e-14 * fresh,
                        "norm cache stale at ({bi},{bj})"
                    );
                }
                None => assert_eq!(stored, 0.0),
            }
        }
    }
}

fn check_hier(h: &HierarchicalLeaf) {
    assert!(!h.has_unnormalized_nodes());
}

#[test]
fn identity_times_a_is_bit_exact() {
    let e: Vec<_> = (0..N).map(|i| (i, (i * 7) % N, i as f64 * 0.37 - 3.0)).collect();
    let (d, b, h) = all_kinds(&e);
    let id: Vec<_> = (0..N).map(|i| (i, i, 1.0)).collect();
    let (di, bi, hi) = all_kinds(&id);
    assert_eq!(di.multiply(&d, false, false).unwrap(), d);
    assert_eq!(bi.multiply(&b, false, false).unwrap(), b);
    assert_eq!(hi.multiply(&h, false, false).unwrap().to_dense(), h.to_dense());
}

#[test]
fn disjoint_block_products_give_one_block_per_compatible_pair() {
    // A holds blocks (0,1), (2,3); B holds (1,0), (1,2), (3,3), (0,0).
    let a = [(0, 8, 1.0), (16, 24, 2.0)];
    let b = [(8, 0, 1.0), (8, 16, 1.0), (24, 24, 3.0), (0, 0, 5.0)];
    let mut pairs = 0;
    for &(_, ac, _) in &a {
        for &(br, _, _) in &b {
            if ac / 8 == br / 8 {
                pairs += 1;
            }
        }
    }
    let l = BlockSparseLeaf::from_triplets(&cfg(), &a).unwrap();
    let r = BlockSparseLeaf::from_triplets(&cfg(), &b).unwrap();
    let c = l.multiply(&r, false, false).unwrap();
    assert_eq!(c.stored_blocks(), pairs);
}

#[test]
fn random_64_pair_matches_the_oracle_in_every_kind() {
    use rand::Rng;
    let cfg = LeafConfig::new(64, 16).unwrap();
    let mut rng = common::rng(64);
    let mut pick = || -> Vec<(usize, usize, f64)> {
        (0..300)
            .map(|_| (rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let (ea, eb) = (pick(), pick());
    let want = common::matmul(64, &dense_of(64, &ea), &dense_of(64, &eb));
    let d = DenseLeaf::from_triplets(&cfg, &ea)
        .unwrap()
        .multiply(&DenseLeaf::from_triplets(&cfg, &eb).unwrap(), false, false)
        .unwrap();
    let b = BlockSparseLeaf::from_triplets(&cfg, &ea)
        .unwrap()
        .multiply(&BlockSparseLeaf::from_triplets(&cfg, &eb).unwrap(), false, false)
        .unwrap();
    let h = HierarchicalLeaf::from_triplets(&cfg, &ea)
        .unwrap()
        .multiply(&HierarchicalLeaf::from_triplets(&cfg, &eb).unwrap(), false, false)
        .unwrap();
    for got in [d.to_dense(), b.to_dense(), h.to_dense()] {
        assert!(rel_err(got.values(), &want) <= 1e-13);
    }
}

#[test]
fn mixed_dimensions_are_rejected() {
    let a = DenseLeaf::from_triplets(&cfg(), &[]).unwrap();
    let b = DenseLeaf::from_triplets(&LeafConfig::new(16, 8).unwrap(), &[]).unwrap();
    assert!(matches!(
        a.multiply(&b, false, false),
        Err(LeafError::DimensionMismatch { .. })
    ));
    assert!(a.add(&b, 1.0, 1.0).is_err());
}

#[test]
fn add_examples() {
    let e = [(1, 2, 3.0), (30, 31, -1.5)];
    let (d, b, h) = all_kinds(&e);
    let z = BlockSparseLeaf::from_triplets(&cfg(), &[(5, 5, 9.0)]).unwrap();
    assert_eq!(b.add(&z, 1.0, 0.0).unwrap(), b);
    assert_eq!(b.add(&b, 1.0, -1.0).unwrap().stored_blocks(), 0);
    assert!(d.add(&d, 1.0, -1.0).unwrap().is_zero());
    let hz = h.add(&h, 1.0, -1.0).unwrap();
    assert_eq!(hz.stored_blocks(), 0);
    check_hier(&hz);
}

#[test]
fn truncate_examples() {
    let e = [(0, 0, 1.0), (9, 9, 2.0), (20, 3, -0.5)];
    let (d, b, h) = all_kinds(&e);
    assert_eq!(b.truncate(0.0).unwrap(), (b.clone(), 0.0));
    assert_eq!(d.truncate(0.0).unwrap(), (d.clone(), 0.0));
    assert_eq!(h.truncate(0.0).unwrap().1, 0.0);
    let big = b.frobenius_norm();
    assert!(b.truncate(big).unwrap().0.is_zero());
    assert!(d.truncate(big).unwrap().0.is_zero());
    assert!(h.truncate(big).unwrap().0.is_zero());
    assert!(matches!(b.truncate(-1.0), Err(LeafError::NegativeTolerance(_))));
}

#[test]
fn norm_examples() {
    assert_eq!(DenseLeaf::from_triplets(&cfg(), &[]).unwrap().frobenius_norm(), 0.0);
    let id: Vec<_> = (0..N).map(|i| (i, i, 1.0)).collect();
    let (d, b, h) = all_kinds(&id);
    for norm in [d.frobenius_norm(), b.frobenius_norm(), h.frobenius_norm()] {
        assert!((norm - (N as f64).sqrt()).abs() < 1e-14);
    }
}

#[test]
fn triplet_examples() {
    let (d, b, h) = all_kinds(&[]);
    assert!(d.is_zero() && b.is_zero() && h.is_zero());
    let (d, b, h) = all_kinds(&[(3, 5, 2.5)]);
    for leaf_get in [
        d.get_elements(&[(3, 5), (5, 3)]),
        b.get_elements(&[(3, 5), (5, 3)]),
        h.get_elements(&[(3, 5), (5, 3)]),
    ] {
        assert_eq!(leaf_get.unwrap(), vec![2.5, 0.0]);
    }
    assert!(matches!(
        DenseLeaf::from_triplets(&cfg(), &[(N, 0, 1.0)]),
        Err(LeafError::IndexOutOfRange { .. })
    ));
    assert!(b.get_elements(&[(0, N)]).is_err());
}

#[test]
fn duplicate_triplets_are_summed() {
    let mut rng = common::rng(7);
    let e: Vec<_> = (0..500)
        .map(|_| {
            use rand::Rng;
            (rng.gen_range(0..N), rng.gen_range(0..N), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let mut map: HashMap<(usize, usize), f64> = HashMap::new();
    for &(r, c, v) in &e {
        *map.entry((r, c)).or_default() += v;
    }
    let (d, b, h) = all_kinds(&e);
    let idx: Vec<_> = map.keys().copied().collect();
    let want: Vec<f64> = idx.iter().map(|k| map[k]).collect();
    assert_eq!(d.get_elements(&idx).unwrap(), want);
    assert_eq!(b.get_elements(&idx).unwrap(), want);
    assert_eq!(h.get_elements(&idx).unwrap(), want);
}

#[test]
fn encoding_round_trips_bit_exactly() {
    let e = [(0, 0, 1.0 / 3.0), (31, 1, -0.0), (17, 17, f64::MIN_POSITIVE)];
    let (d, b, h) = all_kinds(&e);
    let mut buf = Vec::new();
    d.encode(&mut buf);
    assert_eq!(DenseLeaf::decode(&buf).unwrap(), d);
    buf.clear();
    b.encode(&mut buf);
    assert_eq!(BlockSparseLeaf::decode(&buf).unwrap(), b);
    buf.clear();
    h.encode(&mut buf);
    assert_eq!(HierarchicalLeaf::decode(&buf).unwrap().to_dense(), h.to_dense());
    assert!(DenseLeaf::decode(&buf).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kinds_agree_with_the_dense_oracle_on_products(ea in entries(), eb in entries(), ta: bool, tb: bool) {
        let (da, ba, ha) = all_kinds(&ea);
        let (db, bb, hb) = all_kinds(&eb);
        let want = oracle_product(&dense_of(N, &ea), ta, &dense_of(N, &eb), tb);
        let d = da.multiply(&db, ta, tb).unwrap();
        let b = ba.multiply(&bb, ta, tb).unwrap();
        let h = ha.multiply(&hb, ta, tb).unwrap();
        prop_assert!(rel_err(d.values(), &want) <= 1e-13);
        prop_assert!(rel_err(b.to_dense().values(), &want) <= 1e-13);
        prop_assert!(rel_err(h.to_dense().values(), &want) <= 1e-13);
        check_coherent(&b);
        check_hier(&h);
    }

    #[test]
    fn kinds_agree_with_the_dense_oracle_on_sums(ea in entries(), eb in entries(), alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let (da, ba, ha) = all_kinds(&ea);
        let (db, bb, hb) = all_kinds(&eb);
        let (xa, xb) = (dense_of(N, &ea), dense_of(N, &eb));
        let want: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| alpha * x + beta * y).collect();
        let b = ba.add(&bb, alpha, beta).unwrap();
        let h = ha.add(&hb, alpha, beta).unwrap();
        prop_assert!(rel_err(da.add(&db, alpha, beta).unwrap().values(), &want) <= 1e-15);
        prop_assert!(rel_err(b.to_dense().values(), &want) <= 1e-15);
        prop_assert!(rel_err(h.to_dense().values(), &want) <= 1e-15);
        check_coherent(&b);
        check_hier(&h);
    }

    #[test]
    fn norms_match_the_elementwise_oracle(e in entries()) {
        let (d, b, h) = all_kinds(&e);
        let want = frob(&dense_of(N, &e));
        for got in [d.frobenius_norm(), b.frobenius_norm(), h.frobenius_norm()] {
            prop_assert!((got - want).abs() <= 1e-14 * want.max(f64::MIN_POSITIVE));
        }
        let from_blocks = b.block_norms().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((from_blocks - want).abs() <= 1e-14 * want.max(f64::MIN_POSITIVE));
        let mut recomputed: Vec<f64> = block_norms_from_values(&b).into_iter().filter(|&x| x != 0.0).collect();
        let mut stored = b.block_norms();
        recomputed.sort_by(f64::total_cmp);
        stored.sort_by(f64::total_cmp);
        prop_assert_eq!(recomputed.len(), stored.len());
        for (x, y) in recomputed.iter().zip(&stored) {
            prop_assert!((x - y).abs() <= 1e-14 * x);
        }
    }

    #[test]
    fn transposed_scaled_and_symmetrized_views_agree(e in entries(), alpha in -3.0..3.0f64) {
        let (d, b, h) = all_kinds(&e);
        let want_t = d.transpose();
        prop_assert_eq!(&b.transpose().to_dense(), &want_t);
        prop_assert_eq!(&h.transpose().to_dense(), &want_t);
        let want_s = d.scale(alpha);
        prop_assert_eq!(&b.scale(alpha).to_dense(), &want_s);
        prop_assert_eq!(&h.scale(alpha).to_dense(), &want_s);
        let want_u = d.symmetrize_upper();
        prop_assert_eq!(&b.symmetrize_upper().to_dense(), &want_u);
        prop_assert_eq!(&h.symmetrize_upper().to_dense(), &want_u);
        check_coherent(&b.upper_triangle());
        check_hier(&h.upper_triangle());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn truncation_stays_within_tau(e in entries(), frac in 0.0..1.2f64) {
        let (d, b, h) = all_kinds(&e);
        let x = dense_of(N, &e);
        let tau = frac * frob(&x);
        for (got, removed) in [
            d.truncate(tau).map(|(l, r)| (l.to_dense(), r)).unwrap(),
            b.truncate(tau).map(|(l, r)| { check_coherent(&l); (l.to_dense(), r) }).unwrap(),
            h.truncate(tau).map(|(l, r)| { check_hier(&l); (l.to_dense(), r) }).unwrap(),
        ] {
            let err = diff_norm(got.values(), &x);
            prop_assert!(err <= tau, "error {err} above tau {tau}");
            prop_assert!((err - removed).abs() <= 1e-12 * (1.0 + removed));
        }
    }
}
