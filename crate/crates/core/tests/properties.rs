use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use microformal::verify::{Check, Mutation, Sizes};
use microformal::{BiSeries, Context, GaussRat, Poly, Truncation, Var};

fn ctx() -> Arc<Context> {
    Context::morphism(2, 1)
}

fn trunc() -> Truncation {
    Truncation::new(3, 2, 4, None).unwrap()
}

fn gauss() -> impl Strategy<Value = GaussRat> {
    (-9i64..=9, 1i64..=9, -9i64..=9).prop_map(|(a, d, b)| {
        &GaussRat::ratio(a, d) + &GaussRat::ratio(b, d).mul_i()
    })
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((gauss(), 0u16..=2, 0u16..=2, 0u16..=1), 0..4).prop_map(|terms| {
        let c = ctx();
        terms.into_iter().fold(Poly::zero(&c), |acc, (k, a, b, q)| {
            let m = Poly::monomial(&c, k, &[(Var::X(1), a), (Var::X(2), b), (Var::Q(1), q)])
                .unwrap();
            &acc + &m
        })
    })
}

fn series(min_lambda: u32) -> impl Strategy<Value = BiSeries> {
    let t = trunc();
    prop::collection::vec((min_lambda..=t.lambda, 0i32..=4, poly()), 0..4).prop_map(move |terms| {
        let terms = terms.into_iter().map(|(m, j, p)| {
            let j = j % (m as i32 + t.hbar as i32 + 1) - m as i32;
            ((m, j), p)
        });
        BiSeries::from_terms(&ctx(), t, terms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_field_laws(a in gauss(), b in gauss(), c in gauss()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &b, &b + &a);
        if let Some(inv) = a.inv() {
            prop_assert_eq!(&a * &inv, GaussRat::from_int(1));
        }
    }

    #[test]
    fn poly_ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn poly_leibniz(a in poly(), b in poly()) {
        let d = |p: &Poly| p.derivative(Var::X(1)).unwrap();
        prop_assert_eq!(d(&(&a * &b)), &(&d(&a) * &b) + &(&a * &d(&b)));
    }

    #[test]
    fn poly_substitution_homomorphism(a in poly(), b in poly(), s in poly(), t in poly()) {
        let c = ctx();
        let map: BTreeMap<Var, Poly> = [(Var::X(1), s), (Var::X(2), t)].into();
        let sub = |p: &Poly| p.substitute_partial(&map).unwrap();
        prop_assert_eq!(sub(&(&a * &b)), &sub(&a) * &sub(&b));
        prop_assert_eq!(sub(&(&a + &b)), &sub(&a) + &sub(&b));
        prop_assert_eq!(sub(&Poly::one(&c)), Poly::one(&c));
    }

    #[test]
    fn series_ring_laws(a in series(0), b in series(0), c in series(0)) {
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn exp_turns_sums_into_products(a in series(1), b in series(1)) {
        let lhs = a.add(&b).unwrap().exp().unwrap();
        let rhs = a.exp().unwrap().mul(&b.exp().unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn exp_log_inverse(a in series(1)) {
        prop_assert_eq!(a.exp().unwrap().log().unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn verdicts_are_reproducible(seed in 0u64..1000) {
        let sizes = Sizes::default();
        let t = Truncation::new(2, 2, 3, None).unwrap();
        for check in Check::ALL {
            let a = check.run(seed, &sizes, t, Mutation::Off);
            let b = check.run(seed, &sizes, t, Mutation::Off);
            prop_assert!(a.passed, "{}", a);
            prop_assert_eq!(a, b);
        }
    }
}
