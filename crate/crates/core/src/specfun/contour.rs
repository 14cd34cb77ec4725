//! Contours in the u-plane and quadrature along them.

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Estimate, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ContourKind {
    /// Re(u) = c, traversed upward.
    Line { c: f64 },
    /// The imaginary axis with |Im u| >= upsilon, joined through the left
    /// half of the circle |u| = upsilon, traversed upward.
    Indented { upsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Height cutoff T: the path is truncated to |Im u| <= T.
    pub height: f64,
    /// Step in Im u (trapezoid on lines, panel width scale on the indented path).
    pub step: f64,
}

impl ContourSpec {
    pub fn line(c: f64) -> Self {
        ContourSpec { kind: ContourKind::Line { c }, height: 40.0, step: 0.02 }
    }

    pub fn indented(upsilon: f64) -> Self {
        ContourSpec { kind: ContourKind::Indented { upsilon }, height: 40.0, step: 0.02 }
    }

    pub fn with_height(mut self, height: f64) -> Self {
        self.height = height;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.0 && self.step > 0.0) {
            return Err(Error::domain("contour height and step must be positive"));
        }
        if let ContourKind::Indented { upsilon } = self.kind {
            if !(upsilon > 0.0 && upsilon < 0.5) {
                return Err(Error::domain(format!("upsilon must lie in (0, 1/2), got {upsilon}")));
            }
            if upsilon >= self.height {
                return Err(Error::domain("upsilon exceeds the contour height"));
            }
        }
        Ok(())
    }

    /// Points u_j and weights w_j with int g(u) du ~ sum w_j g(u_j).
    pub fn nodes(&self) -> Vec<(Complex64, Complex64)> {
        let i = Complex64::new(0.0, 1.0);
        match self.kind {
            ContourKind::Line { c } => {
                let n = (self.height / self.step).ceil() as i64;
                let h = self.height / n as f64;
                (-n..=n)
                    .map(|k| {
                        let end = if k.abs() == n { 0.5 } else { 1.0 };
                        (Complex64::new(c, k as f64 * h), i * (h * end))
                    })
                    .collect()
            }
            ContourKind::Indented { upsilon } => {
                let mut out = Vec::new();
                let (x, w) = gauss_legendre(20);
                // arc: u = upsilon e^{i phi}, phi from 3pi/2 down to pi/2
                let arc_panels = 4;
                let pi = std::f64::consts::PI;
                for p in 0..arc_panels {
                    let a = 1.5 * pi - p as f64 * pi / arc_panels as f64;
                    let b = a - pi / arc_panels as f64;
                    for (xk, wk) in x.iter().zip(&w) {
                        let phi = 0.5 * (a + b) + 0.5 * (b - a) * xk;
                        let u = Complex64::from_polar(upsilon, phi);
                        out.push((u, i * u * (0.5 * (b - a) * wk)));
                    }
                }
                // vertical pieces, Gauss-Legendre panels of width ~ 20 steps
                let width = 20.0 * self.step;
                let n = ((self.height - upsilon) / width).ceil() as usize;
                let width = (self.height - upsilon) / n as f64;
                for sign in [-1.0, 1.0] {
                    for p in 0..n {
                        let a = upsilon + p as f64 * width;
                        for (xk, wk) in x.iter().zip(&w) {
                            let t = a + 0.5 * width * (1.0 + xk);
                            out.push((Complex64::new(0.0, sign * t), i * (0.5 * width * wk)));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// (1/(2 pi i)) int_C g(u) du along the contour.
///
/// The error estimate combines the change under halving the step with
/// `tail(T)`, a caller-supplied bound on |(1/2 pi i) int| over |Im u| > T.
pub fn contour_integral(g: impl Fn(Complex64) -> Complex64, spec: &ContourSpec, tail: impl Fn(f64) -> f64) -> Result<Estimate<Complex64>> {
    spec.validate()?;
    let sum = |s: &ContourSpec| -> Complex64 { s.nodes().iter().map(|&(u, w)| g(u) * w).sum::<Complex64>() / Complex64::new(0.0, 2.0 * std::f64::consts::PI) };
    let fine = sum(spec);
    let coarse = sum(&spec.with_step(spec.step * 2.0));
    let err = (fine - coarse).norm() + tail(spec.height);
    if !err.is_finite() {
        return Err(Error::Tolerance { what: "contour_integral", requested: 0.0, achieved: err });
    }
    Ok(Estimate::new(fine, err))
}
