use matsos::decompose::{iterated_sd, one_sd, SymMatFun};
use matsos::grid::GridSpec;
use matsos::jet::{eval, eval_jet, ScalarExpr};
use matsos::report::{CheckReport, Condition, Verdict};
use matsos::symmat::{comparability_bracket, loewner_leq, min_eigenvalue, SymMatrix};
use proptest::prelude::*;

fn expr() -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        Just(ScalarExpr::var(0)),
        Just(ScalarExpr::var(1)),
        (-2.0f64..2.0).prop_map(ScalarExpr::constant),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.prop_map(|a| (a * 0.3).exp()),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| [a, b])
}

fn psd(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |b| {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>() + if i == j { 0.05 } else { 0.0 })
                    .collect()
            })
            .collect()
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_value_matches_eval(e in expr(), p in point()) {
        let j = eval_jet(&e, &p, 4).unwrap();
        prop_assert!(close(j.value(), eval(&e, &p).unwrap(), 1e-14));
    }

    #[test]
    fn jet_product_rule(f in expr(), g in expr(), p in point()) {
        let prod = eval_jet(&(&f * &g), &p, 4).unwrap();
        let rule = eval_jet(&f, &p, 4).unwrap().mul(&eval_jet(&g, &p, 4).unwrap());
        for ((mu, a), (_, b)) in prod.entries().into_iter().zip(rule.entries()) {
            prop_assert!(close(a, b, 1e-11), "{mu:?}: {a} vs {b}");
        }
    }

    #[test]
    fn jet_sum_is_linear(f in expr(), g in expr(), p in point(), c in -3.0f64..3.0) {
        let lhs = eval_jet(&(&f + &(&g * c)), &p, 3).unwrap();
        let jf = eval_jet(&f, &p, 3).unwrap();
        let jg = eval_jet(&g, &p, 3).unwrap();
        for (mu, a) in lhs.entries() {
            let b = jf.partial(&mu).unwrap() + c * jg.partial(&mu).unwrap();
            prop_assert!(close(a, b, 1e-12), "{mu:?}");
        }
    }

    #[test]
    fn expression_json_round_trip(e in expr()) {
        let s = serde_json::to_string(&e).unwrap();
        let back: ScalarExpr = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn one_square_reconstructs(a in psd(4)) {
        let o = one_sd(&SymMatFun::constant(&SymMatrix::from_rows(&a).unwrap(), 0), &GridSpec::explicit(vec![vec![]])).unwrap();
        let z: Vec<f64> = o.z.iter().map(|e| eval(e, &[]).unwrap()).collect();
        let q = o.q.unwrap().eval(&[]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let emb = if i > 0 && j > 0 { q.get(i - 1, j - 1) } else { 0.0 };
                prop_assert!((a[i][j] - z[i] * z[j] - emb).abs() <= 1e-12);
            }
        }
        prop_assert!(min_eigenvalue(&q).unwrap() >= -1e-12);
    }

    #[test]
    fn full_peel_reconstructs(a in psd(4)) {
        let d = iterated_sd(&SymMatFun::constant(&SymMatrix::from_rows(&a).unwrap(), 0), 5, &GridSpec::explicit(vec![vec![]])).unwrap();
        prop_assert!(d.residual.is_none());
        prop_assert!(d.certificate(Condition::Reconstruction).unwrap().passed());
    }

    #[test]
    fn bracket_is_tight_and_valid(a in psd(3), b in psd(3)) {
        let (a, b) = (SymMatrix::from_rows(&a).unwrap(), SymMatrix::from_rows(&b).unwrap());
        let (lo, hi) = comparability_bracket(&a, &b).unwrap();
        prop_assert!(lo > 0.0 && lo <= hi);
        let tol = 1e-9 * a.max_abs().max(b.max_abs());
        prop_assert!(loewner_leq(&b.scale(lo), &a, tol).unwrap());
        prop_assert!(loewner_leq(&a, &b.scale(hi), tol).unwrap());
        prop_assert!(!loewner_leq(&b.scale(lo * 1.01 + 1e-6), &a, 0.0).unwrap());
    }

    #[test]
    fn combine_fails_iff_a_part_fails(vs in proptest::collection::vec(0u8..4, 1..6)) {
        let verdicts = [Verdict::Pass, Verdict::Fail, Verdict::Inconclusive, Verdict::InconclusiveByFlatness];
        let parts: Vec<CheckReport> = vs.iter().map(|&v| CheckReport::new(Condition::Subordinate, verdicts[v as usize])).collect();
        let r = CheckReport::combine(Condition::StrongRegularity, parts);
        prop_assert_eq!(r.verdict == Verdict::Fail, vs.contains(&1));
        if vs.iter().all(|&v| v == 0) {
            prop_assert_eq!(r.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn seeded_grids_are_reproducible(seed in any::<u64>(), count in 1usize..50) {
        let g = GridSpec::sphere(3, count).with_seed(seed);
        prop_assert_eq!(g.points(), g.clone().points());
        prop_assert_eq!(g.points().len(), count);
    }
}
