use elltrace::arith::*;
use elltrace::charsum::{kl, KloostermanSpec};
use elltrace::elliptic::{eisenstein_residue_value, trivial_rep_value, Bump, EllipticInstance, ThetaPair};
use elltrace::lfun::TruncationBudget;
use elltrace::specfun::{gamma, mellin_f};
use num_complex::Complex64;
use proptest::prelude::*;

fn discriminant() -> impl Strategy<Value = i64> {
    (-10_000i64..=10_000).prop_filter("discriminant", |d| *d != 0 && matches!(d.rem_euclid(4), 0 | 1))
}

/// (l, f) with 4lf^2 <= 10^4.
fn modulus_pair() -> impl Strategy<Value = (u64, u64)> {
    (1u64..=50).prop_flat_map(|f| (1u64..=(2500 / (f * f)).max(1), Just(f))).prop_filter("bound", |(l, f)| 4 * l * f * f <= 10_000)
}

fn bump() -> impl Strategy<Value = Bump> {
    (-0.5f64..0.5, 0.3f64..1.5, -2.0f64..2.0).prop_map(|(c, r, a)| Bump::new(c, r, a))
}

fn theta() -> impl Strategy<Value = ThetaPair> {
    (bump(), bump(), bump()).prop_map(|(a, b, c)| ThetaPair::new(vec![a], vec![b], vec![c]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn kronecker_is_multiplicative(d in discriminant(), l1 in 1u64..=1000, l2 in 1u64..=1000) {
        prop_assert_eq!(kronecker(d, l1 * l2), kronecker(d, l1) * kronecker(d, l2));
    }

    #[test]
    fn decompose_reassembles(d in discriminant()) {
        let got = decompose(d).unwrap();
        prop_assert_eq!(got.fundamental * (got.conductor * got.conductor) as i64, d);
        prop_assert!(got.fundamental == 1 || is_fundamental(got.fundamental));
    }

    #[test]
    fn kl_periodic_conjugate_and_bounded((l, f) in modulus_pair(), xi in -500i64..500, n in -60i64..60) {
        prop_assume!(n != 0);
        let q = (4 * l * f * f) as i64;
        let a = kl(KloostermanSpec::new(l, f, xi, n).unwrap()).unwrap();
        let b = kl(KloostermanSpec::new(l, f, xi + q, n).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        let c = kl(KloostermanSpec::new(l, f, -xi, n).unwrap()).unwrap();
        prop_assert!((a - c.conj()).norm() <= 1e-9 * (1.0 + a.norm()));
        prop_assert!(a.norm() <= q as f64 + 1e-9);
    }

    #[test]
    fn mellin_is_odd(re in 0.1f64..3.0, im in -10.0f64..10.0) {
        let z = Complex64::new(re, im);
        let (a, b) = (mellin_f(z).unwrap(), mellin_f(-z).unwrap());
        prop_assert!((a + b).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn gamma_reflection(re in -4.5f64..4.5, im in -3.0f64..3.0) {
        let s = Complex64::new(re, im);
        prop_assume!((s - s.re.round()).norm() > 1e-3);
        let lhs = gamma(s).unwrap() * gamma(1.0 - s).unwrap();
        let rhs = std::f64::consts::PI / (s * std::f64::consts::PI).sin();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn closed_forms_are_additive(a in theta(), b in theta(), p in prop::sample::select(vec![2u64, 3, 5])) {
        let inst = |t: ThetaPair| EllipticInstance::new(p, 1, t, TruncationBudget::default()).unwrap();
        let (ia, ib, iab) = (inst(a.clone()), inst(b.clone()), inst(a.sum(&b)));
        for f in [trivial_rep_value, eisenstein_residue_value] {
            let (va, vb, vab) = (f(&ia).unwrap().value, f(&ib).unwrap().value, f(&iab).unwrap().value);
            prop_assert!((vab - va - vb).abs() <= 1e-9 * (1.0 + va.abs() + vb.abs()));
        }
    }
}
