//! Riemann and Hurwitz zeta functions by Euler-Maclaurin summation.

use num_complex::Complex64;

use crate::{Error, Result};

/// B_{2k} / (2k)! for k = 1..15.
const BERNOULLI_OVER_FACTORIAL: [f64; 15] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
    77683.0 / 14101100039391805440000.0,
    -236364091.0 / 1693824136731743669452800000.0,
    657931.0 / 186134520519971831808000000.0,
    -3392780147.0 / 37893265687455865519472640000000.0,
    1723168255201.0 / 759790291646040068357842010112000000.0,
];

/// Hurwitz zeta(s, a) for a > 0, s != 1.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64> {
    if (s - 1.0).norm() < 1e-15 {
        return Err(Error::Pole { what: "zeta", at: format!("{s}") });
    }
    if !(a > 0.0) {
        return Err(Error::domain("hurwitz_zeta needs a > 0"));
    }
    // N well beyond |s| / (2 pi) keeps the remainder of the 15-term tail small.
    let n = (12.0 + s.norm()).ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        sum += (-s * (k as f64 + a).ln()).exp();
    }
    let na = n as f64 + a;
    let ln_na = na.ln();
    let pow = (-s * ln_na).exp();
    sum += pow * na / (s - 1.0) + 0.5 * pow;
    // (s)_{2k-1} N^{-s-2k+1}
    let mut rising = s;
    let mut term_pow = pow / na;
    for (k, &b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        sum += b * rising * term_pow;
        let j = 2.0 * k as f64 + 1.0;
        rising *= (s + j) * (s + j + 1.0);
        term_pow /= na * na;
    }
    Ok(sum)
}

pub fn zeta(s: Complex64) -> Result<Complex64> {
    hurwitz_zeta(s, 1.0)
}

/// 1/zeta(s), continuous through the pole at s = 1.
pub fn zeta_recip(s: Complex64) -> Complex64 {
    if (s - 1.0).norm() < 1e-15 {
        return Complex64::new(0.0, 0.0);
    }
    1.0 / zeta(s).expect("pole excluded above")
}

pub fn zeta_real(s: f64) -> Result<f64> {
    Ok(zeta(Complex64::new(s, 0.0))?.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn special_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta_real(2.0).unwrap() - pi * pi / 6.0).abs() < 1e-15);
        assert!((zeta_real(4.0).unwrap() - pi.powi(4) / 90.0).abs() < 1e-15);
        assert!((zeta_real(3.0).unwrap() - 1.2020569031595942).abs() < 1e-15);
        assert!((zeta_real(0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((zeta_real(-1.0).unwrap() + 1.0 / 12.0).abs() < 1e-13);
        assert!((zeta_real(0.5).unwrap() + 1.4603545088095868).abs() < 1e-14);
    }

    #[test]
    fn first_zero_and_high_line() {
        let z = zeta(c(0.5, 14.134725141734693)).unwrap();
        assert!(z.norm() < 1e-12, "{z}");
        // zeta(1 + 40i), reference from mpmath
        let z = zeta(c(1.0, 40.0)).unwrap();
        assert!((z - c(0.8497954792468068, -0.4917762864607187)).norm() < 1e-12, "{z}");
    }

    #[test]
    fn hurwitz_reduces() {
        // zeta(s, 1/2) = (2^s - 1) zeta(s)
        let s = c(2.5, 3.0);
        let h = hurwitz_zeta(s, 0.5).unwrap();
        let z = zeta(s).unwrap() * (s * 2f64.ln()).exp() - zeta(s).unwrap();
        assert!((h - z).norm() < 1e-13);
    }
}
