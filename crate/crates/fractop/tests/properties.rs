use fractop::automaton::{analyse, check_symmetry, classify_equivalence, Verdict};
use fractop::cli::parse_range;
use fractop::graph::similarity_dimension;
use fractop::metric::{eta_modulus, rho, EtaParams};
use fractop::samples;
use fractop::{EvPeriodicWord, Ifs, Symbol};
use proptest::prelude::*;
use std::sync::OnceLock;

fn sierpinski() -> &'static Ifs {
    static S: OnceLock<Ifs> = OnceLock::new();
    S.get_or_init(samples::sierpinski)
}

fn word(n: Symbol) -> impl Strategy<Value = EvPeriodicWord> {
    (prop::collection::vec(1..=n, 0..6), prop::collection::vec(1..=n, 1..4)).prop_map(|(pre, per)| EvPeriodicWord::new(pre, per).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_is_symmetric_and_comparable(x in word(3), y in word(3)) {
        let ifs = sierpinski();
        let (a, b) = (rho(ifs, &x, &y).unwrap(), rho(ifs, &y, &x).unwrap());
        prop_assert_eq!(a, b);
        let d = ifs.eval(&x).unwrap().dist(ifs.eval(&y).unwrap());
        if a == 0.0 {
            prop_assert!(d < 1e-9);
        } else {
            prop_assert!(d <= 5.0 * a && a <= 5.0 * d);
        }
    }

    #[test]
    fn lowest_coding_is_idempotent(x in word(4)) {
        let ifs = samples::k_alpha(0.25);
        let l = ifs.lowest_coding(&x).unwrap();
        prop_assert_eq!(ifs.lowest_coding(&l).unwrap(), l.clone());
        prop_assert!(ifs.eval(&l).unwrap().dist(ifs.eval(&x).unwrap()) < 1e-9);
        prop_assert!(l <= x.clone() || ifs.all_codings(&x).unwrap().contains(&l));
    }

    #[test]
    fn surviving_time_is_symmetric(ws in prop::collection::vec(word(3), 2..8)) {
        let a = analyse(&samples::sierpinski_spec()).unwrap();
        let ws: Vec<EvPeriodicWord> = ws.iter().map(|w| a.ifs.lowest_coding(w).unwrap()).collect();
        prop_assert!(check_symmetry(&a.automaton, &ws));
    }

    #[test]
    fn eta_is_monotone(t in 1e-6f64..1.0, k in 1.0f64..4.0, s in 0.5f64..3.0) {
        let p = EtaParams { r_star: 0.25, r_sup: 0.5, rprime_star: 0.125, s };
        let (a, b) = (eta_modulus(&p, t).unwrap(), eta_modulus(&p, t * k).unwrap());
        prop_assert!(a <= b * (1.0 + 1e-12));
        prop_assert!(a > 0.0);
    }

    #[test]
    fn moran_residual_is_small(ratios in prop::collection::vec(0.001f64..0.999, 1..20)) {
        let s = similarity_dimension(&ratios).unwrap();
        let sum: f64 = ratios.iter().map(|r| r.powf(s)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        prop_assert!(s >= 0.0);
    }

    #[test]
    fn relabeled_copies_are_lipschitz_equivalent(perm in Just(vec![1u16, 2, 3]).prop_shuffle()) {
        let spec = samples::interval3_spec(0.25, 0.125);
        let copy = spec.relabeled(&perm).unwrap();
        let c = classify_equivalence(&spec, &copy).unwrap();
        prop_assert_eq!(c.verdict, Verdict::Lipschitz);
    }

    #[test]
    fn ranges_expand_inclusively(a in 0usize..50, len in 0usize..50) {
        let b = a + len;
        let r = parse_range(&format!("{a}..{b}")).unwrap();
        prop_assert_eq!(r.len(), len + 1);
        prop_assert_eq!((r[0], r[len]), (a, b));
    }
}
