use elltrace::arith::*;

#[test]
fn square_traces_match_exhaustive_scan() {
    for pk in 1..=1000i64 {
        for n in [pk, -pk] {
            let listed: Vec<(i64, u64)> = enumerate_square_traces(n).iter().map(|t| (t.m, t.root)).collect();
            let bound = 4 * pk + 1;
            let scanned: Vec<(i64, u64)> = (-bound..=bound)
                .filter_map(|m| {
                    let d = m * m - 4 * n;
                    (d >= 0 && is_square(d)).then(|| (m, isqrt(d as u64)))
                })
                .collect();
            assert_eq!(listed, scanned, "n = {n}");
        }
    }
}

#[test]
fn class_numbers_match_dirichlet_sum() {
    // h = -(1/|D|) sum_{a<|D|} a (D/a) for fundamental D < -4, independent
    // of form reduction
    for d in (-1000..-4i64).filter(|&d| is_fundamental(d)) {
        let q = d.unsigned_abs();
        let s: i64 = (1..q).map(|a| a as i64 * kronecker(d, a) as i64).sum();
        assert_eq!(s % q as i64, 0);
        let h = (-s / q as i64) as u64;
        assert_eq!(class_data(d).unwrap().class_number, h, "D = {d}");
        assert_eq!(reduced_definite_forms(d).len() as u64, h);
    }
}

#[test]
fn decompose_inverts_square_scaling() {
    let fundamentals: Vec<i64> = (-400..=400).filter(|&d| is_fundamental(d)).collect();
    for &d in &fundamentals {
        for s in 1..=100u64 {
            let v = d * (s * s) as i64;
            let got = decompose(v).unwrap();
            assert_eq!((got.fundamental, got.conductor, got.value), (d, s, v));
            assert_eq!(got.iota, u8::from(d < 0));
        }
    }
}

#[test]
fn factorization_round_trip() {
    for n in 1..5000u64 {
        let f = factorize(n);
        assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), n);
        assert!(f.iter().all(|&(p, _)| is_prime(p)));
    }
}
