use elltrace::arith::Sign;
use elltrace::elliptic::*;
use elltrace::lfun::TruncationBudget;

fn second_theta() -> ThetaPair {
    ThetaPair::new(
        vec![Bump::new(0.3, 1.5, 0.7)],
        vec![Bump::new(-0.2, 1.8, 1.3).modulated(vec![1.0, 0.5])],
        vec![Bump::new(0.4, 1.2, 0.8)],
    )
    .unwrap()
}

fn inst(p: u64, k: u32, theta: ThetaPair, alpha: f64) -> EllipticInstance {
    EllipticInstance::new(p, k, theta, TruncationBudget { alpha, ..Default::default() }).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn direct_is_linear_in_theta() {
    let (a, b) = (ThetaPair::default(), second_theta());
    for p in [2u64, 3] {
        let va = direct_elliptic(&inst(p, 1, a.clone(), 0.5)).unwrap().value;
        let vb = direct_elliptic(&inst(p, 1, b.clone(), 0.5)).unwrap().value;
        let vab = direct_elliptic(&inst(p, 1, a.sum(&b), 0.5)).unwrap().value;
        assert!(close(vab, va + vb, 1e-9), "p={p}: {vab} vs {}", va + vb);
        let v2 = direct_elliptic(&inst(p, 1, a.scaled(-2.5), 0.5)).unwrap().value;
        assert!(close(v2, -2.5 * va, 1e-12));
    }
}

#[test]
fn closed_form_pieces_are_linear_in_theta() {
    let (a, b) = (ThetaPair::default(), second_theta());
    let (ia, ib, iab) = (inst(3, 1, a.clone(), 0.4), inst(3, 1, b.clone(), 0.4), inst(3, 1, a.sum(&b), 0.4));
    let triv = |i: &EllipticInstance| trivial_rep_value(i).unwrap().value;
    assert!(close(triv(&iab), triv(&ia) + triv(&ib), 1e-9));
    let eis = |i: &EllipticInstance| eisenstein_residue_value(i).unwrap().value;
    assert!(close(eis(&iab), eis(&ia) + eis(&ib), 1e-9));
    let sq = |i: &EllipticInstance| sigma_square(i).unwrap().value;
    assert!(close(sq(&iab), sq(&ia) + sq(&ib), 1e-9));
    let xs = |i: &EllipticInstance| xi0_series(i).unwrap().value;
    assert!(close(xs(&iab), xs(&ia) + xs(&ib), 1e-9));
    let xc = |i: &EllipticInstance| xi0_contour(i).unwrap().value;
    assert!(close(xc(&iab), xc(&ia) + xc(&ib), 1e-9));
}

#[test]
fn poisson_is_linear_in_theta() {
    let (a, b) = (ThetaPair::default(), second_theta());
    let pv = |t: ThetaPair| poisson_rhs(&inst(2, 1, t, 0.5)).unwrap().value;
    let (va, vb, vab) = (pv(a.clone()), pv(b.clone()), pv(a.sum(&b)));
    assert!(close(vab, va + vb, 1e-9), "{vab} vs {}", va + vb);
}

#[test]
fn zero_theta_gives_zero_everywhere() {
    let i = inst(2, 1, ThetaPair::zero(), 0.5);
    assert_eq!(direct_elliptic(&i).unwrap().value, 0.0);
    assert_eq!(sigma_square(&i).unwrap().value, 0.0);
    assert_eq!(poisson_rhs(&i).unwrap().value, 0.0);
    assert_eq!(xi0_series(&i).unwrap().value, 0.0);
    assert_eq!(xi0_contour(&i).unwrap().value, 0.0);
    assert_eq!(trivial_rep_value(&i).unwrap().value, 0.0);
    assert_eq!(eisenstein_residue_value(&i).unwrap().value, 0.0);
}

#[test]
fn direct_value_is_alpha_free() {
    let a = direct_elliptic(&inst(3, 1, second_theta(), 0.4)).unwrap().value;
    let b = direct_elliptic(&inst(3, 1, second_theta(), 0.6)).unwrap().value;
    assert!(close(a, b, 1e-10), "{a} vs {b}");
}

#[test]
fn poisson_side_is_alpha_invariant_up_to_squares() {
    // At a square discriminant the AFE sum is a regularization that depends
    // on the split, so only poisson_rhs - sigma_square is alpha-free.
    let i4 = inst(3, 1, ThetaPair::default(), 0.4);
    let i6 = inst(3, 1, ThetaPair::default(), 0.6);
    let a = poisson_rhs(&i4).unwrap().value - sigma_square(&i4).unwrap().value;
    let b = poisson_rhs(&i6).unwrap().value - sigma_square(&i6).unwrap().value;
    assert!(close(a, b, 1e-3), "{a} vs {b}");
    // with no square trace in the support the Poisson side itself is alpha-free
    let narrow = ThetaPair::standard(0.0, 0.5);
    let a = poisson_rhs(&inst(3, 1, narrow.clone(), 0.4)).unwrap().value;
    let b = poisson_rhs(&inst(3, 1, narrow, 0.6)).unwrap().value;
    assert!(close(a, b, 1e-3), "{a} vs {b}");
}

#[test]
fn poisson_matches_direct_plus_squares_at_p2() {
    let i = inst(2, 1, ThetaPair::default(), 0.5);
    let lhs = direct_elliptic(&i).unwrap().value + sigma_square(&i).unwrap().value;
    let rhs = poisson_rhs(&i).unwrap();
    assert!(close(lhs, rhs.value, 1e-3), "{lhs} vs {}", rhs.value);
}

#[test]
fn nonzero_frequencies_decay() {
    let side = poisson_rhs(&inst(2, 1, ThetaPair::default(), 0.5)).unwrap();
    let first = side.pairs.iter().find(|t| t.f == 1 && t.l == 1 && t.sign == Sign::Plus).unwrap();
    // Kl_{1,1}(xi) vanishes unless 4 | xi
    let mag = |xi: i64| first.head.iter().find(|h| h.0 == xi).map(|h| h.1.abs()).unwrap();
    assert!(mag(16) < mag(8) && mag(8) < mag(4) && mag(4) > 0.0, "{:?}", first.head);
}

#[test]
fn square_traces_at_p3() {
    // m = +-4 (det +3) and m = +-2 (det -3); the other m in the support
    // give no square discriminant
    let i = inst(3, 1, ThetaPair::default(), 0.5);
    let total = sigma_square(&i).unwrap().value;
    assert!(total != 0.0);
    let narrow = ThetaPair::standard(0.0, 0.5);
    // |x| < 0.5 means |m| < sqrt3: no square trace is reached
    assert_eq!(sigma_square(&inst(3, 1, narrow, 0.5)).unwrap().value, 0.0);
}

#[test]
fn sigma_square_stable_under_l_doubling() {
    let base = inst(3, 1, ThetaPair::default(), 0.5);
    let a = sigma_square(&base).unwrap();
    let mut wide = base.clone();
    wide.budget.l_max *= 2;
    let b = sigma_square(&wide).unwrap();
    assert!((a.value - b.value).abs() <= a.error + b.error + 1e-14, "{} vs {}", a.value, b.value);
}

#[test]
fn xi0_series_matches_closed_form() {
    for (p, k, theta, alpha) in [(2u64, 1u32, ThetaPair::default(), 0.5), (3, 2, ThetaPair::default(), 0.5), (5, 1, second_theta(), 0.4)] {
        let i = inst(p, k, theta, alpha);
        let s = xi0_series(&i).unwrap().value;
        let c = xi0_contour(&i).unwrap().value;
        assert!(close(s, c, 1e-6), "p={p} k={k}: {s} vs {c}");
    }
}

#[test]
fn support_inside_unit_interval() {
    // only the minus sign has x^2 + 1 > 0 there; the plus pieces are all t < 0
    let t = ThetaPair::new(vec![Bump::new(0.0, 0.8, 1.0)], vec![Bump::new(0.1, 0.7, 1.0)], vec![]).unwrap();
    let i = inst(2, 1, t, 0.5);
    assert_eq!(eisenstein_residue_value(&i).unwrap().value, 0.0);
    let s = xi0_series(&i).unwrap().value;
    let c = xi0_contour(&i).unwrap().value;
    assert!(close(s, c, 1e-6), "{s} vs {c}");
}

#[test]
fn main_identity_at_p2() {
    let r = main_identity_check(&inst(2, 1, ThetaPair::default(), 0.5)).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn smoothing_kernels_and_control() {
    for alpha in [0.4, 0.5, 0.6] {
        for kernel in [SmoothingKernel::F, SmoothingKernel::H] {
            assert!(smoothing_check(&ThetaPair::default(), alpha, kernel).unwrap().smooth(), "{kernel:?} alpha={alpha}");
        }
        assert!(!smoothing_check(&ThetaPair::default(), alpha, SmoothingKernel::Raw).unwrap().smooth());
    }
}

#[test]
fn bad_instances_are_rejected() {
    let b = TruncationBudget::default();
    assert!(EllipticInstance::new(4, 1, ThetaPair::default(), b).is_err());
    assert!(EllipticInstance::new(2, 0, ThetaPair::default(), b).is_err());
    assert!(EllipticInstance::new(2, 60, ThetaPair::default(), b).is_err());
    assert!(EllipticInstance::new(2, 1, ThetaPair::default(), TruncationBudget { alpha: 1.0, ..b }).is_err());
    assert!(smoothing_check(&ThetaPair::default(), 0.0, SmoothingKernel::F).is_err());
}
