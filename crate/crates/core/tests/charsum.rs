use elltrace::charsum::*;
use num_complex::Complex64;

#[test]
fn dseries_converges_to_euler_product() {
    for n in [1i64, -1, 2, -2, 3, -3, 4, -4, 6, -6, 8, -8, 9, -9, 12, -12] {
        for z in [Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(2.0, 1.0)] {
            let d = dseries_truncated(z, n, 200, 200).unwrap();
            let e = euler_product(z, n).unwrap();
            assert!((d.value - e).norm() <= d.tail_bound, "n={n} z={z}: {} vs {e}, tail {}", d.value, d.tail_bound);
        }
    }
}

#[test]
fn residue_class_enumeration_agrees() {
    for (l, f, n) in [(7u64, 1u64, 3i64), (6, 2, -5), (9, 3, 12), (10, 1, -8)] {
        for xi in [-5i64, 0, 1, 13] {
            let spec = KloostermanSpec::new(l, f, xi, n).unwrap();
            assert!((kl(spec).unwrap() - kl_by_residue_classes(spec).unwrap()).norm() < 1e-9);
        }
    }
}

#[test]
fn kl_zero_frequency_is_an_integer_and_matches_grid() {
    for n in [5i64, -7, 12] {
        let grid = Kl0Grid::new(n, 4, 12);
        for f in 1..=4u64 {
            let adm = Admissible::new(f, n);
            for l in 1..=12u64 {
                let direct = kl(KloostermanSpec::new(l, f, 0, n).unwrap()).unwrap();
                assert!(direct.im.abs() < 1e-9 && (direct.re - direct.re.round()).abs() < 1e-9);
                assert_eq!(grid.get(l, f) as f64, direct.re.round(), "l={l} f={f} n={n}");
                assert!(adm.count() as u64 <= 4 * f * f);
            }
        }
    }
}

#[test]
fn oversized_modulus_is_refused() {
    let spec = KloostermanSpec::new(1000, 100, 1, 1).unwrap();
    assert!(kl(spec).is_err());
    assert!(KloostermanSpec::new(0, 1, 0, 1).is_err());
}
