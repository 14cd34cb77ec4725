//! Modified Bessel function of the second kind for complex order.

use num_complex::Complex64;

use crate::{Error, Estimate, Result};

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt.
///
/// The integrand decays doubly exponentially and extends to an entire
/// function, so the trapezoid rule converges geometrically in 1/h. The error
/// estimate is the change from step 2h to h plus the truncated tail.
pub fn bessel_k(nu: Complex64, x: f64) -> Result<Estimate<Complex64>> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("bessel_k needs x > 0, got {x}")));
    }
    let a = nu.re.abs();
    let mut t_max = 1.0f64;
    while x * t_max.cosh() - a * t_max < 60.0 {
        t_max += 0.25;
    }
    // finer steps for oscillatory orders
    let h = (0.05f64).min(1.0 / (1.0 + nu.im.abs()).sqrt() * 0.2);
    let n = (t_max / h).ceil() as usize;
    let h = t_max / n as f64;
    let g = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    let mut even = 0.5 * g(0.0);
    let mut odd = Complex64::new(0.0, 0.0);
    for i in 1..=n {
        let v = g(i as f64 * h);
        if i % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    let coarse = even * (2.0 * h);
    let fine = (even + odd) * h;
    let tail = (-x * t_max.cosh() + a * t_max).exp();
    let err = (fine - coarse).norm() + tail;
    if !fine.re.is_finite() || !fine.im.is_finite() {
        return Err(Error::Tolerance { what: "bessel_k", requested: 0.0, achieved: f64::INFINITY });
    }
    Ok(Estimate::new(fine, err))
}
