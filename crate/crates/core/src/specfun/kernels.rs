//! The smooth cutoff F, its Mellin transform, and the dual kernels H_0, H_1.
//!
//! F(x) = (1/(2 K_0(2))) int_x^inf exp(-y - 1/y) dy/y. Substituting y = e^s
//! makes the integrand even in s, hence F(x) + F(1/x) = 1.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::bessel::bessel_k;
use super::contour::{ContourKind, ContourSpec};
use super::gamma::gamma_ratio_z;
use super::quad::{gauss_kronrod, QuadratureSpec};
use crate::{Error, Estimate, Result};

/// K_0(2).
pub fn k0_at_2() -> f64 {
    static K0: OnceLock<f64> = OnceLock::new();
    *K0.get_or_init(|| bessel_k(Complex64::new(0.0, 0.0), 2.0).expect("K_0(2)").value.re)
}

fn f_integrand(s: f64) -> f64 {
    (-(s.exp() + (-s).exp())).exp()
}

/// F(x) by quadrature, with relative accuracy also in the far tail.
pub fn cutoff_f(x: f64) -> Result<Estimate<f64>> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("cutoff_f needs x > 0, got {x}")));
    }
    if x < 1.0 {
        let c = cutoff_f(1.0 / x)?;
        return Ok(Estimate::new(1.0 - c.value, c.error));
    }
    let lo = x.ln();
    let spec = QuadratureSpec::with_tol(1e-300, 1e-14);
    let r = gauss_kronrod(f_integrand, lo, lo + 5.0, &spec)?;
    let norm = 2.0 * k0_at_2();
    Ok(Estimate::new(r.value / norm, r.error / norm))
}

/// 1 - F(x) = F(1/x), accurate when tiny.
pub fn cutoff_f_complement(x: f64) -> Result<Estimate<f64>> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("cutoff_f needs x > 0, got {x}")));
    }
    cutoff_f(1.0 / x)
}

pub fn cutoff_f_deriv(x: f64) -> f64 {
    -(-x - 1.0 / x).exp() / (2.0 * k0_at_2() * x)
}

/// F~(z) = K_z(2) / (z K_0(2)).
pub fn mellin_f(z: Complex64) -> Result<Complex64> {
    if z.norm() < 1e-300 {
        return Err(Error::Pole { what: "mellin_f", at: "0".into() });
    }
    Ok(bessel_k(z, 2.0)?.value / (z * k0_at_2()))
}

/// int_0^inf F(u) u^{z-1} du for Re z > 0, by nested quadrature.
///
/// With u = e^s and 1 - F(e^{-s}) = F(e^s) this is
/// 1/z + int_0^inf F(e^s) 2 sinh(z s) ds, whose integrand decays doubly
/// exponentially.
pub fn mellin_f_direct(z: Complex64) -> Result<Estimate<Complex64>> {
    if !(z.re > 0.0) {
        return Err(Error::domain(format!("mellin_f_direct needs Re z > 0, got {z}")));
    }
    let spec = QuadratureSpec::with_tol(1e-15, 1e-13);
    let f = |s: f64| -> Complex64 {
        let a = cutoff_f(s.exp()).map(|e| e.value).unwrap_or(f64::NAN);
        2.0 * a * (z * s).sinh()
    };
    let r = gauss_kronrod(f, 0.0, 5.0, &spec)?;
    Ok(Estimate::new(1.0 / z + r.value, r.error))
}

/// Dual kernel for the approximate functional equation at a general point z:
///
///   H(y) = pi^{z-1/2} / (2 pi i) int_{(c)} G(u) (pi y)^{-u} F~(u) du,
///   G(u) = Gamma((1-z+u+iota)/2) / Gamma((z-u+iota)/2).
///
/// The path-dependent factors are precomputed once so every H(y) is a single
/// weighted sum over the nodes.
#[derive(Clone, Debug)]
pub struct DualKernel {
    pub iota: u8,
    pub z: Complex64,
    nodes: Vec<(Complex64, Complex64)>,
    tail_weight: f64,
    c: f64,
}

impl DualKernel {
    pub fn new(iota: u8, z: Complex64, contour: &ContourSpec) -> Result<Self> {
        contour.validate()?;
        let c = match contour.kind {
            ContourKind::Line { c } => c,
            ContourKind::Indented { .. } => return Err(Error::domain("dual kernel needs a vertical line")),
        };
        let pre = (std::f64::consts::PI.ln() * (z - 0.5)).exp() / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut nodes = Vec::new();
        for (u, w) in contour.nodes() {
            let g = gamma_ratio_z(iota, z, u)?;
            nodes.push((u, pre * w * g * mellin_f(u)?));
        }
        // the integrand decays like exp(-pi |t| / 2)
        let top = Complex64::new(c, contour.height);
        let edge = (pre * gamma_ratio_z(iota, z, top)? * mellin_f(top)?).norm();
        Ok(DualKernel { iota, z, nodes, tail_weight: 2.0 * edge * 2.0 / std::f64::consts::PI, c })
    }

    /// The three s-derivatives (s = ln y) of H at y.
    pub fn eval_with_derivs(&self, y: f64) -> [Complex64; 3] {
        let lpy = (std::f64::consts::PI * y).ln();
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for &(u, w) in &self.nodes {
            let t = w * (-u * lpy).exp();
            out[0] += t;
            out[1] -= t * u;
            out[2] += t * u * u;
        }
        out
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        let lpy = (std::f64::consts::PI * y).ln();
        self.nodes.iter().map(|&(u, w)| w * (-u * lpy).exp()).sum()
    }

    /// Bound on the discarded |Im u| > T part at y.
    pub fn tail(&self, y: f64) -> f64 {
        self.tail_weight * (std::f64::consts::PI * y).powf(-self.c)
    }
}

/// H_iota(y) at z = 1 on the given line contour, with its error estimate
/// (step halving plus tail).
pub fn dual_kernel_h(iota: u8, y: f64, contour: &ContourSpec) -> Result<Estimate<f64>> {
    if !(y > 0.0) {
        return Err(Error::domain(format!("dual_kernel_h needs y > 0, got {y}")));
    }
    let one = Complex64::new(1.0, 0.0);
    let fine = DualKernel::new(iota, one, contour)?;
    let coarse = DualKernel::new(iota, one, &contour.with_step(contour.step * 2.0))?;
    let v = fine.eval(y);
    let err = (v - coarse.eval(y)).norm() + fine.tail(y) + 1e-16 * fine.nodes.iter().map(|n| n.1.norm()).sum::<f64>() / (std::f64::consts::PI * y);
    Ok(Estimate::new(v.re, err.max(v.im.abs())))
}

/// C in |H_iota(y)| <= C e^{-2 sqrt(y)} / y for y >= 1. The largest observed
/// ratio is about 0.47, at y = 1; the true decay is closer to e^{-4 sqrt(y)}.
pub const H_DECAY_CONSTANT: f64 = 1.0;

/// Fitted fast envelope |H_iota(y)| <= 6 e^{-3.5 sqrt(y)}, checked on
/// y in [0.05, 110] (largest ratio about 5.3); beyond that the contour sum
/// is at roundoff.
pub const H_FAST_ENVELOPE: (f64, f64) = (6.0, 3.5);

/// Bound on |H_iota(y)|: the smaller of the two envelopes, or infinity for
/// y < 0.05.
pub fn h_envelope(y: f64) -> f64 {
    if !(y >= 0.05) {
        return f64::INFINITY;
    }
    let fast = H_FAST_ENVELOPE.0 * (-H_FAST_ENVELOPE.1 * y.sqrt()).exp();
    if y >= 1.0 {
        fast.min(H_DECAY_CONSTANT * (-2.0 * y.sqrt()).exp() / y)
    } else {
        fast
    }
}

/// Bound on F(x): F(x) <= min(1, e^{-x} / (2 K_0(2) x)).
pub fn f_envelope(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ((-x).exp() / (2.0 * k0_at_2() * x)).min(1.0)
}

/// Quintic Hermite interpolant of g(s) on a uniform grid, from g, g', g''.
#[derive(Clone, Debug)]
struct Hermite5 {
    s0: f64,
    h: f64,
    data: Vec<[f64; 3]>,
}

impl Hermite5 {
    fn build(s0: f64, s1: f64, n: usize, f: impl Fn(f64) -> [f64; 3]) -> Self {
        let h = (s1 - s0) / n as f64;
        let data = (0..=n).map(|i| f(s0 + i as f64 * h)).collect();
        Hermite5 { s0, h, data }
    }

    fn eval(&self, s: f64) -> f64 {
        let pos = (s - self.s0) / self.h;
        let i = (pos.floor() as usize).min(self.data.len() - 2);
        let t = pos - i as f64;
        let [p0, m0, a0] = self.data[i];
        let [p1, m1, a1] = self.data[i + 1];
        let h = self.h;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        h0 * p0 + h1 * h * m0 + h2 * h * h * a0 + h3 * h * h * a1 + h4 * h * m1 + h5 * p1
    }
}

/// Tabulated F, H_0 and H_1 for fast evaluation inside large sums.
///
/// F is 1 below 1/64 and 0 above 64 (the neglected parts are below
/// e^{-64}); H_iota is 0 above 1600 (|H| < e^{-80} there) and is summed
/// directly below 1e-4.
#[derive(Debug)]
pub struct KernelTables {
    f: Hermite5,
    h: [Hermite5; 2],
    direct: [DualKernel; 2],
}

pub const F_TABLE_RANGE: (f64, f64) = (1.0 / 64.0, 64.0);
pub const H_TABLE_RANGE: (f64, f64) = (1e-4, 1600.0);

impl KernelTables {
    pub fn build(contour: &ContourSpec) -> Result<Self> {
        let norm = 2.0 * k0_at_2();
        let f = Hermite5::build(F_TABLE_RANGE.0.ln(), F_TABLE_RANGE.1.ln(), 4096, |s| {
            let x = s.exp();
            let e = (-x - 1.0 / x).exp() / norm;
            [cutoff_f(x).map(|r| r.value).unwrap_or(f64::NAN), -e, e * (x - 1.0 / x)]
        });
        let one = Complex64::new(1.0, 0.0);
        let direct = [DualKernel::new(0, one, contour)?, DualKernel::new(1, one, contour)?];
        let h = [0, 1].map(|i| {
            let k = &direct[i];
            Hermite5::build(H_TABLE_RANGE.0.ln(), H_TABLE_RANGE.1.ln(), 8192, |s| {
                let d = k.eval_with_derivs(s.exp());
                [d[0].re, d[1].re, d[2].re]
            })
        });
        if f.data.iter().chain(&h[0].data).chain(&h[1].data).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Tolerance { what: "kernel tables", requested: 0.0, achieved: f64::NAN });
        }
        Ok(KernelTables { f, h, direct })
    }

    pub fn global() -> &'static KernelTables {
        static T: OnceLock<KernelTables> = OnceLock::new();
        T.get_or_init(|| KernelTables::build(&ContourSpec::line(1.0)).expect("kernel tables"))
    }

    pub fn f(&self, x: f64) -> f64 {
        if x <= F_TABLE_RANGE.0 {
            1.0
        } else if x >= F_TABLE_RANGE.1 {
            0.0
        } else {
            self.f.eval(x.ln())
        }
    }

    pub fn h(&self, iota: u8, y: f64) -> f64 {
        if y >= H_TABLE_RANGE.1 {
            0.0
        } else if y < H_TABLE_RANGE.0 {
            self.direct[iota as usize].eval(y).re
        } else {
            self.h[iota as usize].eval(y.ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_limits_and_symmetry() {
        assert!((cutoff_f(1e-9).unwrap().value - 1.0).abs() < 1e-15);
        for x in [0.1, 0.5, 1.0, 3.0] {
            let s = cutoff_f(x).unwrap().value + cutoff_f(1.0 / x).unwrap().value;
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert!((cutoff_f(1.0).unwrap().value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mellin_at_one() {
        // K_1(2)/K_0(2)
        let v = mellin_f(Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 1.228036929818908).abs() < 1e-14, "{v}");
        let d = mellin_f_direct(Complex64::new(1.0, 0.0)).unwrap();
        assert!((d.value - v).norm() < 1e-10);
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let g = |s: f64| [s.powi(5) - s, 5.0 * s.powi(4) - 1.0, 20.0 * s.powi(3)];
        let t = Hermite5::build(0.0, 1.0, 3, g);
        for s in [0.1, 0.4, 0.77] {
            assert!((t.eval(s) - g(s)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn tables_match_direct_evaluation() {
        let t = KernelTables::global();
        for x in [0.02, 0.3, 1.0, 2.7, 11.0, 40.0] {
            assert!((t.f(x) - cutoff_f(x).unwrap().value).abs() < 1e-13, "F({x})");
        }
        let c = ContourSpec::line(1.0);
        for y in [2e-4, 0.01, 0.5, 1.0, 4.0, 25.0, 300.0] {
            for iota in [0, 1] {
                let d = dual_kernel_h(iota, y, &c).unwrap();
                assert!((t.h(iota, y) - d.value).abs() < 1e-12, "H{iota}({y}) {} {}", t.h(iota, y), d.value);
            }
        }
    }
}
