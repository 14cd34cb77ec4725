//! Complex Gamma function (Lanczos, g = 7) with reflection.

use num_complex::Complex64;

use crate::{Error, Result};

const G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// True when z is (numerically) a non-positive integer.
pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im.abs() < 1e-14 && z.re <= 0.5 && (z.re - z.re.round()).abs() < 1e-14
}

/// log Gamma(z), on some branch; only differences are exponentiated.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pi = std::f64::consts::PI;
        return Complex64::new(pi.ln(), 0.0) - (z * pi).sin().ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    if is_gamma_pole(z) {
        return Err(Error::Pole { what: "gamma", at: format!("{z}") });
    }
    Ok(ln_gamma(z).exp())
}

/// Gamma(a) / Gamma(b); zero when b is a pole.
pub fn gamma_quotient(a: Complex64, b: Complex64) -> Result<Complex64> {
    if is_gamma_pole(a) {
        return Err(Error::Pole { what: "gamma_quotient", at: format!("{a}") });
    }
    if is_gamma_pole(b) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok((ln_gamma(a) - ln_gamma(b)).exp())
}

/// Gamma((1 - z + u + iota)/2) / Gamma((z - u + iota)/2). At z = 1 this is
/// Gamma(u/2)/Gamma((1-u)/2) for iota = 0 and Gamma((1+u)/2)/Gamma((2-u)/2)
/// for iota = 1.
pub fn gamma_ratio_z(iota: u8, z: Complex64, u: Complex64) -> Result<Complex64> {
    let i = iota as f64;
    gamma_quotient((1.0 - z + u + i) / 2.0, (z - u + i) / 2.0)
}

pub fn gamma_ratio(iota: u8, u: Complex64) -> Result<Complex64> {
    gamma_ratio_z(iota, Complex64::new(1.0, 0.0), u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn known_values() {
        let pi = std::f64::consts::PI;
        assert!((gamma(c(0.5, 0.0)).unwrap() - pi.sqrt()).norm() < 1e-14);
        assert!((gamma(c(5.0, 0.0)).unwrap() - 24.0).norm() < 1e-12);
        assert!((gamma(c(-0.5, 0.0)).unwrap() + 2.0 * pi.sqrt()).norm() < 1e-13);
        // |Gamma(1/2 + it)|^2 = pi / cosh(pi t)
        let g = gamma(c(0.5, 7.0)).unwrap();
        assert!((g.norm_sqr() / (pi / (pi * 7.0).cosh()) - 1.0).abs() < 1e-12);
        assert!(gamma(c(-3.0, 0.0)).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(gamma_ratio(0, c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        let r = gamma_ratio(1, c(1.0, 0.0)).unwrap();
        assert!((r - 1.0 / std::f64::consts::PI.sqrt()).norm() < 1e-14);
        assert!(gamma_ratio(0, c(0.0, 0.0)).is_err());
    }
}
