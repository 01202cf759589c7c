//! Property tests for the structural invariants.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use zigzag_core::equivariance::{verify_group_cohomology, RationalRep};
use zigzag_core::exact::linalg::SparseMatrix;
use zigzag_core::exact::{solve_linear, SparseVec, Q};
use zigzag_core::hochschild::alg_class;
use zigzag_core::io;
use zigzag_core::twisted::{
    apply_braid, cardy_verify, finiteness_check, reduce, scale_transfer, tw_compose,
    tw_differential, twist, untwist, BraidWord, TwHom, TwMap, TwistedComplex,
};
use zigzag_core::zigzag::ZigzagAlgebra;

fn alg(m: usize, n: i64) -> Arc<ZigzagAlgebra> {
    Arc::new(ZigzagAlgebra::build(m, n).unwrap())
}

fn word(m: usize, max_len: usize) -> impl Strategy<Value = BraidWord> {
    prop::collection::vec((1..=m, any::<bool>()), 0..=max_len).prop_map(|v| {
        BraidWord(
            v.into_iter()
                .map(|(k, s)| (k, if s { 1 } else { -1 }))
                .collect(),
        )
    })
}

fn image(a: &Arc<ZigzagAlgebra>, w: &BraidWord, k: usize) -> TwistedComplex {
    apply_braid(w, &TwistedComplex::projective(a, k, 0, 0)).unwrap()
}

/// Random map of total degree `t` from integer coefficients.
fn random_map(c0: &TwistedComplex, c1: &TwistedComplex, t: i64, coeffs: &[i64]) -> TwMap {
    let hom = TwHom::build(c0, c1);
    let mut f = TwMap {
        deg: t,
        terms: BTreeMap::new(),
    };
    let keys = hom
        .blocks
        .values()
        .filter_map(|b| b.bases.get((t - b.lo) as usize))
        .flatten();
    for (key, c) in keys.zip(coeffs.iter().cycle()) {
        f.add(*key, Q::from(*c));
    }
    f
}

fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=5, 1usize..=5)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-3i64..=3, c), r))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn rationals_are_canonical(n in -50i64..50, d in 1i64..50, k in 1i64..6) {
        let q = Q::new(n * k, d * k);
        prop_assert_eq!(q.clone(), Q::new(n, d));
        let text = q.to_string();
        prop_assert_eq!(text.parse::<Q>().unwrap(), q.clone());
        let json = serde_json::to_string(&q).unwrap();
        prop_assert!(json.contains('/'));
        prop_assert_eq!(serde_json::from_str::<Q>(&json).unwrap(), q);
    }

    #[test]
    fn solve_is_exact_and_rank_nullity_holds(a in matrix(), x0 in prop::collection::vec(-4i64..=4, 5)) {
        let m = SparseMatrix::from_dense(&a);
        let cols = a[0].len();
        let x0: SparseVec = x0.iter().take(cols).enumerate().filter(|(_, v)| **v != 0).map(|(i, v)| (i, Q::from(*v))).collect();
        let b = m.mul_vec(&x0);
        let sol = solve_linear(&m, &b).unwrap();
        let x = sol.x.expect("consistent by construction");
        prop_assert_eq!(m.mul_vec(&x), b);
        for k in &sol.kernel {
            prop_assert!(m.mul_vec(k).is_empty());
        }
        prop_assert_eq!(m.rank() + sol.kernel.len(), cols);
    }

    #[test]
    fn cohomology_projection_is_idempotent(w in word(2, 4), k in 1usize..=2, seed in any::<u64>()) {
        let a = alg(2, 2);
        let c = image(&a, &w, k);
        let hom = TwHom::build(&c, &c);
        for b in hom.blocks.values() {
            let h = b.complex.cohomology();
            for (t, hd) in &h.degrees {
                for (i, r) in hd.reps.iter().enumerate() {
                    let p = hd.project(r).unwrap();
                    let unit: Vec<Q> = (0..hd.dim()).map(|j| if j == i { Q::one() } else { Q::zero() }).collect();
                    prop_assert_eq!(p, unit);
                }
                // boundaries project to zero
                let below = b.complex.dim(t - 1);
                if below > 0 {
                    let x: SparseVec = vec![((seed as usize) % below, Q::one())];
                    let dx = b.complex.apply(t - 1, &x);
                    prop_assert!(hd.project(&dx).unwrap().iter().all(|q| q.is_zero()));
                }
            }
        }
    }

    #[test]
    fn algebra_products_respect_weight(m in 1usize..=4, n in 1i64..=3) {
        let a = ZigzagAlgebra::build(m, n).unwrap();
        prop_assert_eq!(a.dim(), if m == 1 { 2 } else { 4 * m - 2 });
        let unit_deg1 = ZigzagAlgebra::build(m, 1).unwrap();
        for x in 0..a.dim() {
            prop_assert!(a.deg(x) == 0 || a.deg(x) == n);
            prop_assert_eq!(a.deg(x), n * unit_deg1.deg(x));
            for y in 0..a.dim() {
                prop_assert_eq!(a.mul_basis(x, y).map(|(z, c)| (z, c.clone())), unit_deg1.mul_basis(x, y).map(|(z, c)| (z, c.clone())));
                if let Some((z, _)) = a.mul_basis(x, y) {
                    prop_assert_eq!(a.weight(z), a.weight(x) + a.weight(y));
                }
                for z in 0..a.dim() {
                    let left = a.multiply(&a.multiply(&vec![(x, Q::one())], &vec![(y, Q::one())]), &vec![(z, Q::one())]);
                    let right = a.multiply(&vec![(x, Q::one())], &a.multiply(&vec![(y, Q::one())], &vec![(z, Q::one())]));
                    prop_assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn hom_differential_squares_to_zero_and_is_a_derivation(
        w0 in word(2, 3), w1 in word(2, 3), w2 in word(2, 3),
        t0 in -2i64..=2, t1 in -2i64..=2,
        coeffs in prop::collection::vec(-3i64..=3, 1..8),
    ) {
        let a = alg(2, 2);
        let (c0, c1, c2) = (image(&a, &w0, 1), image(&a, &w1, 2), image(&a, &w2, 1));
        let f = random_map(&c0, &c1, t0, &coeffs);
        let g = random_map(&c1, &c2, t1, &coeffs);
        prop_assert!(tw_differential(&c0, &c1, &tw_differential(&c0, &c1, &f)).is_zero());
        let lhs = tw_differential(&c0, &c2, &tw_compose(&a, &g, &f));
        let mut rhs = tw_compose(&a, &tw_differential(&c1, &c2, &g), &f);
        rhs.add_scaled(&Q::sign(g.deg), &tw_compose(&a, &g, &tw_differential(&c0, &c1, &f)));
        prop_assert_eq!(lhs.terms, rhs.terms);
    }

    #[test]
    fn twist_untwist_is_identity_after_reduction(w in word(3, 4), j in 1usize..=3, k in 1usize..=3) {
        let a = alg(3, 2);
        let c = image(&a, &w, j);
        let back = reduce(&untwist(k, &reduce(&twist(k, &c)))).canonical();
        prop_assert!(back == c.canonical() || zigzag_core::twisted::quasi_iso(&back, &c, 8, 0).is_some());
        prop_assert_eq!(reduce(&c).k_class(), c.k_class());
        prop_assert!(finiteness_check(&c));
        prop_assert!(c.to_module().validate().passed());
    }

    #[test]
    fn cardy_and_fundamental_class(w0 in word(3, 3), w1 in word(3, 3), n in 2i64..=3, j in 1usize..=3, k in 1usize..=3) {
        let a = alg(3, n);
        let (c0, c1) = (image(&a, &w0, j), image(&a, &w1, k));
        prop_assert!(cardy_verify(&c0, &c1));
        let cls = alg_class(&c0).unwrap();
        prop_assert_eq!(cls.as_integers(), Some(c0.k_class()));
    }

    #[test]
    fn scale_transfer_round_trips(w in word(2, 4), k in 1usize..=2, n_new in 1i64..=5) {
        let a = alg(2, 4);
        let c = image(&a, &w, k);
        let there = scale_transfer(&c, n_new).unwrap();
        prop_assert_eq!(scale_transfer(&there, 4).unwrap(), c);
    }

    #[test]
    fn stored_complexes_round_trip(w in word(3, 4), k in 1usize..=3) {
        let a = alg(3, 3);
        let c = image(&a, &w, k);
        let text = io::twisted_to_text(&c).unwrap();
        let back = io::twisted_from_text(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(io::twisted_to_text(&back).unwrap(), text);
    }

    #[test]
    fn group_cohomology_of_random_reps(dims in prop::collection::btree_map(-5i64..=5, 1usize..=3, 1..4)) {
        let v = RationalRep::new(dims);
        let r = verify_group_cohomology(&v, 4);
        prop_assert!(r.holds, "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn pipeline_succeeds_on_braid_images(w in word(2, 4), k in 1usize..=2, seed in 0u64..1000) {
        use zigzag_core::equivariance::pipeline::{run_pipeline, PipelineOptions};
        let a = alg(2, 2);
        let c = image(&a, &w, k);
        let opts = PipelineOptions { scramble: Some(seed), ..Default::default() };
        let r = run_pipeline("random", &c, &opts).unwrap();
        prop_assert!(r.passed(), "{:?}", r);
    }
}
