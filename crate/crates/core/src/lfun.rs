//! The weighted quadratic L-value
//!
//!   L(z, delta) = sum' f^{1-2z} L(z, ((delta/f^2)/.))
//!
//! over f with f^2 | delta and delta/f^2 = 0, 1 mod 4, its completion
//! Lambda(z, delta) = (|delta|/pi)^{z/2} Gamma((z + iota)/2) L(z, delta), and
//! four independent ways of evaluating it.
//!
//! The Kronecker symbol is always the literal (delta/f^2 / l), never the
//! primitive character of the fundamental part.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{decompose, divisors_with_square_cofactor, factorize, is_fundamental, kronecker, ClassSource, Computed, Discriminant, QuadraticFieldData};
use crate::specfun::{gamma, hurwitz_zeta, k0_at_2, ContourKind, ContourSpec, DualKernel, KernelTables, QuadratureSpec, H_DECAY_CONSTANT};
use crate::{Error, Estimate, Result};

const PI: f64 = std::f64::consts::PI;

/// AFE sums stop once F's argument passes this (F < e^{-40} / (2 K_0(2)))...
const AFE_F_CUT: f64 = 40.0;
/// ...and H's argument passes this (|H| < e^{-40} / 400).
const AFE_H_CUT: f64 = 400.0;

/// Largest |D| accepted by the finite character sum oracle.
pub const CHARACTER_SUM_BOUND: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LMethod {
    TruncatedSeries,
    Afe,
    ClassNumberFormula,
    FiniteCharacterSum,
}

impl LMethod {
    pub const ALL: [LMethod; 4] = [LMethod::TruncatedSeries, LMethod::Afe, LMethod::ClassNumberFormula, LMethod::FiniteCharacterSum];

    pub fn name(self) -> &'static str {
        match self {
            LMethod::TruncatedSeries => "truncated-series",
            LMethod::Afe => "afe",
            LMethod::ClassNumberFormula => "class-number-formula",
            LMethod::FiniteCharacterSum => "finite-character-sum",
        }
    }
}

/// Cutoffs and tolerances shared by the L-value and elliptic computations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationBudget {
    /// AFE split point; `None` means |delta|^{1/2} for a standalone L-value
    /// and |delta|^alpha inside the elliptic sums.
    pub a: Option<f64>,
    pub alpha: f64,
    /// Radius of the half circle in the indented contour.
    pub upsilon: f64,
    pub l_max: u64,
    pub f_max: u64,
    /// Cap on the Poisson frequencies: |xi| <= xi_max * 4lf^2.
    pub xi_max: f64,
    /// Absolute target for discarded tails.
    pub tol: f64,
    pub quadrature: QuadratureSpec,
    pub contour: ContourSpec,
}

impl Default for TruncationBudget {
    fn default() -> Self {
        TruncationBudget {
            a: None,
            alpha: 0.5,
            upsilon: 0.25,
            l_max: 1_000_000,
            f_max: 500,
            xi_max: 64.0,
            tol: 1e-12,
            quadrature: QuadratureSpec::default(),
            contour: ContourSpec::line(1.0),
        }
    }
}

impl TruncationBudget {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.a {
            if !(a > 0.0) {
                return Err(Error::domain(format!("AFE split A must be positive, got {a}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.upsilon > 0.0 && self.upsilon < 0.5) {
            return Err(Error::domain(format!("upsilon must lie in (0, 1/2), got {}", self.upsilon)));
        }
        if self.l_max == 0 || self.f_max == 0 {
            return Err(Error::domain("l_max and f_max must be positive"));
        }
        if !(self.xi_max > 0.0 && self.tol > 0.0) {
            return Err(Error::domain("xi_max and tol must be positive"));
        }
        self.quadrature.validate()?;
        self.contour.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LValueRequest {
    pub z: Complex64,
    pub delta: Discriminant,
    pub method: LMethod,
    pub budget: TruncationBudget,
}

impl LValueRequest {
    pub fn new(z: Complex64, delta: Discriminant, method: LMethod, budget: TruncationBudget) -> Result<Self> {
        let r = LValueRequest { z, delta, method, budget };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        let at_one = (self.z - 1.0).norm() < 1e-15;
        match self.method {
            LMethod::ClassNumberFormula if !at_one => Err(Error::domain("the class number formula gives z = 1 only")),
            LMethod::TruncatedSeries if self.z.re <= 1.0 => Err(Error::domain(format!("truncated series needs Re(z) > 1, got {}", self.z))),
            LMethod::Afe | LMethod::ClassNumberFormula if self.delta.is_square() => {
                Err(Error::domain(format!("L(z, {}) has a pole at z = 1 and no AFE of this shape", self.delta.value)))
            }
            LMethod::FiniteCharacterSum if at_one && self.delta.is_square() => Err(Error::Pole { what: "L(z, square)", at: "1".into() }),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self) -> Result<Estimate<Complex64>> {
        self.evaluate_with(&Computed)
    }

    pub fn evaluate_with(&self, src: &impl ClassSource) -> Result<Estimate<Complex64>> {
        self.validate()?;
        let (z, delta) = (self.z, self.delta.value);
        match self.method {
            LMethod::TruncatedSeries => weighted_l_series(z, delta, self.budget.l_max),
            LMethod::Afe => afe(z, &self.delta, &self.budget),
            LMethod::ClassNumberFormula => {
                let mut v = 0.0;
                for f in divisors_with_square_cofactor(delta) {
                    v += l1_class_number(delta / (f * f) as i64, src)? / f as f64;
                }
                Ok(Estimate::new(Complex64::new(v, 0.0), 1e-14 * v.abs()))
            }
            LMethod::FiniteCharacterSum => {
                let mut v = Complex64::new(0.0, 0.0);
                for f in divisors_with_square_cofactor(delta) {
                    let ff = f as f64;
                    let piece = if (z - 1.0).norm() < 1e-15 {
                        Complex64::new(l1_character_sum_imprimitive(delta / (f * f) as i64)?, 0.0)
                    } else {
                        hurwitz_l(z, delta / (f * f) as i64)?
                    };
                    v += piece * (-(2.0 * z - 1.0) * ff.ln()).exp();
                }
                Ok(Estimate::new(v, 1e-12 * v.norm()))
            }
        }
    }
}

pub fn weighted_l(z: Complex64, delta: &Discriminant, method: LMethod, budget: &TruncationBudget) -> Result<Estimate<Complex64>> {
    LValueRequest::new(z, *delta, method, *budget)?.evaluate()
}

/// (delta/l) for l = 0..|delta|; the symbol has period |delta| in l.
pub fn character_table(delta: i64) -> Vec<i8> {
    let q = delta.unsigned_abs();
    let mut t: Vec<i8> = (0..q).map(|l| if l == 0 { 0 } else { kronecker(delta, l) }).collect();
    if q == 1 {
        t[0] = 1;
    }
    t
}

/// Bound on |sum_{N < l <= M} chi(l) l^{-z}| for all M > N.
fn character_tail(table: &[i8], principal: bool, z: Complex64, n: u64) -> f64 {
    let sigma = z.re;
    let nf = (n.max(1)) as f64;
    if principal {
        return nf.powf(1.0 - sigma) / (sigma - 1.0) + nf.powf(-sigma);
    }
    // partial summation against S(t) - S(N), bounded by twice the largest
    // partial sum over one period
    let mut s = 0i64;
    let mut b = 0i64;
    for &c in table.iter().skip(1).chain(table.iter().take(1)) {
        s += c as i64;
        b = b.max(s.abs());
    }
    2.0 * b as f64 * (1.0 + z.norm() / sigma) * nf.powf(-sigma)
}

/// Partial sum of L(z, (delta/.)) over l <= terms with a partial-summation
/// tail bound.
pub fn dirichlet_l_truncated(z: Complex64, chi: &Discriminant, terms: u64) -> Result<Estimate<Complex64>> {
    if z.re <= 1.0 {
        return Err(Error::domain(format!("the Dirichlet series needs Re(z) > 1, got {z}")));
    }
    let table = character_table(chi.value);
    let q = table.len() as u64;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 1..=terms {
        let c = table[(l % q) as usize];
        if c != 0 {
            sum += (-z * (l as f64).ln()).exp() * c as f64;
        }
    }
    let tail = character_tail(&table, chi.is_square(), z, terms);
    Ok(Estimate::new(sum, tail + 1e-16 * terms as f64))
}

/// Eq. (L) as one Dirichlet series sum_n a_n n^{-z}, a_n = sum f (delta/f^2 / n/f^2)
/// over f^2 | n, truncated at n <= terms.
pub fn weighted_l_series(z: Complex64, delta: i64, terms: u64) -> Result<Estimate<Complex64>> {
    if z.re <= 1.0 {
        return Err(Error::domain(format!("the Dirichlet series needs Re(z) > 1, got {z}")));
    }
    let fs = divisors_with_square_cofactor(delta);
    let tables: Vec<Vec<i8>> = fs.iter().map(|&f| character_table(delta / (f * f) as i64)).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=terms {
        let mut a = 0i64;
        for (f, t) in fs.iter().zip(&tables) {
            let f2 = f * f;
            if n % f2 == 0 {
                a += *f as i64 * t[((n / f2) % t.len() as u64) as usize] as i64;
            }
        }
        if a != 0 {
            sum += (-z * (n as f64).ln()).exp() * a as f64;
        }
    }
    let mut tail = 1e-16 * terms as f64;
    for (f, t) in fs.iter().zip(&tables) {
        let d = decompose(delta / (f * f) as i64)?;
        tail += (*f as f64).powf(1.0 - 2.0 * z.re) * character_tail(t, d.is_square(), z, terms / (f * f));
    }
    Ok(Estimate::new(sum, tail))
}

/// Eq. (L) term by term over f, each character summed separately.
pub fn weighted_l_by_f(z: Complex64, delta: i64, terms: u64) -> Result<Estimate<Complex64>> {
    let mut v = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for f in divisors_with_square_cofactor(delta) {
        let d = decompose(delta / (f * f) as i64)?;
        let w = (-(2.0 * z - 1.0) * (f as f64).ln()).exp();
        let piece = dirichlet_l_truncated(z, &d, terms)?;
        v += w * piece.value;
        err += w.norm() * piece.error;
    }
    Ok(Estimate::new(v, err))
}

/// L(1, chi_D) from the class number formula.
pub fn l1_from_class_data(data: &QuadraticFieldData) -> f64 {
    let d = data.discriminant as f64;
    let h = data.class_number as f64;
    match (data.regulator, data.root_count) {
        (Some(r), _) => 2.0 * h * r / d.sqrt(),
        (None, Some(w)) => 2.0 * PI * h / (w as f64 * (-d).sqrt()),
        (None, None) => f64::NAN,
    }
}

/// L(1, (delta/.)) for a non-square discriminant: the class number formula on
/// the fundamental part times (1 - chi_D(q)/q) for primes q dividing the
/// conductor.
pub fn l1_class_number(delta: i64, src: &impl ClassSource) -> Result<f64> {
    let d = decompose(delta)?;
    if d.is_square() {
        return Err(Error::Pole { what: "L(1, principal character)", at: format!("delta = {delta}") });
    }
    let mut v = l1_from_class_data(&src.class_data(d.fundamental)?);
    for (q, _) in factorize(d.conductor) {
        v *= 1.0 - kronecker(d.fundamental, q) as f64 / q as f64;
    }
    Ok(v)
}

/// L(1, chi_D) for a fundamental D from the finite sums
///
///   D < 0:  -(pi / |D|^{3/2}) sum_{a<|D|} a chi(a)
///   D > 0:  -(1 / sqrt(D)) sum_{a<D} chi(a) log sin(pi a / D)
pub fn l1_character_sum_oracle(d: i64) -> Result<f64> {
    if !is_fundamental(d) {
        return Err(Error::domain(format!("{d} is not a fundamental discriminant")));
    }
    let q = d.unsigned_abs();
    if q > CHARACTER_SUM_BOUND {
        return Err(Error::Bound { what: "character sum oracle", value: q as u128, bound: CHARACTER_SUM_BOUND as u128 });
    }
    let qf = q as f64;
    if d < 0 {
        let s: i64 = (1..q).map(|a| a as i64 * kronecker(d, a) as i64).sum();
        Ok(-PI * s as f64 / qf.powf(1.5))
    } else {
        // sin(pi a / q) = sin(pi (q - a) / q), so fold the sum in half
        let mut s = 0.0;
        for a in 1..=(q - 1) / 2 {
            let c = kronecker(d, a) as f64 + kronecker(d, q - a) as f64;
            if c != 0.0 {
                s += c * (PI * a as f64 / qf).sin().ln();
            }
        }
        Ok(-s / qf.sqrt())
    }
}

fn l1_character_sum_imprimitive(delta: i64) -> Result<f64> {
    let d = decompose(delta)?;
    let mut v = l1_character_sum_oracle(d.fundamental)?;
    for (q, _) in factorize(d.conductor) {
        v *= 1.0 - kronecker(d.fundamental, q) as f64 / q as f64;
    }
    Ok(v)
}

/// L(z, (delta/.)) = q^{-z} sum_{a=1}^{q} (delta/a) zeta(z, a/q), q = |delta|.
/// Valid for every z != 1 and every discriminant, square or not.
pub fn hurwitz_l(z: Complex64, delta: i64) -> Result<Complex64> {
    let table = character_table(delta);
    let q = table.len() as u64;
    let qf = q as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for a in 1..=q {
        let c = table[(a % q) as usize];
        if c != 0 {
            s += hurwitz_zeta(z, a as f64 / qf)? * c as f64;
        }
    }
    Ok(s * (-z * qf.ln()).exp())
}

/// Lambda(z, delta) with L from the requested method.
pub fn completed_lambda(z: Complex64, delta: &Discriminant, method: LMethod, budget: &TruncationBudget) -> Result<Estimate<Complex64>> {
    let l = weighted_l(z, delta, method, budget)?;
    let pre = lambda_factor(z, delta)?;
    Ok(Estimate::new(pre * l.value, pre.norm() * l.error))
}

/// (|delta|/pi)^{z/2} Gamma((z + iota)/2).
pub fn lambda_factor(z: Complex64, delta: &Discriminant) -> Result<Complex64> {
    let g = gamma((z + delta.iota as f64) * 0.5)?;
    Ok((z * 0.5 * (delta.value.unsigned_abs() as f64 / PI).ln()).exp() * g)
}

fn split_point(delta: &Discriminant, budget: &TruncationBudget) -> f64 {
    budget.a.unwrap_or_else(|| (delta.value.unsigned_abs() as f64).sqrt())
}

/// Number of l-terms for one f: both kernel arguments past their cutoffs.
fn afe_terms(r_f: f64, r_h: f64, l_max: u64) -> u64 {
    let need = (AFE_F_CUT / r_f).max(AFE_H_CUT / r_h).ceil();
    (need as u64).clamp(1, l_max)
}

/// Tail bound for sum_{l > n} (1/(f l)) [F(l r_f) + (l f^2 / sqrt|delta|) H(l r_h)]
/// from F(x) < e^{-x} / (2 K_0(2)) and the fitted H envelope.
fn afe_tail(f: f64, sqrt_delta: f64, r_f: f64, r_h: f64, n: u64) -> f64 {
    let nf = n as f64;
    let x = nf * r_f;
    let tail_f = (-x).exp() / (2.0 * k0_at_2() * f * nf * (1.0 - (-r_f).exp()));
    let y = nf * r_h;
    let tail_h = if y >= 1.0 {
        f / sqrt_delta * H_DECAY_CONSTANT * (-2.0 * y.sqrt()).exp() / (r_h * y.sqrt())
    } else {
        f64::INFINITY
    };
    tail_f + tail_h
}

/// The AFE at z = 1:
///
///   L(1, delta) = sum' (1/f) sum_l (1/l) (delta/f^2 / l)
///                 [F(lf^2/A) + (lf^2/sqrt|delta|) H_iota(lf^2 A/|delta|)]
///
/// with tabulated kernels.
pub fn afe_l1(delta: &Discriminant, budget: &TruncationBudget) -> Result<Estimate<f64>> {
    if delta.is_square() {
        return Err(Error::domain(format!("no AFE at the square discriminant {}", delta.value)));
    }
    Ok(afe_l1_sum(delta.value, delta.iota, split_point(delta, budget), budget.l_max))
}

/// The z = 1 AFE sum at split point `a`, without the non-square check. At a
/// square discriminant this is the truncated expression of the square-trace
/// correction, not an L-value.
pub fn afe_l1_sum(delta: i64, iota: u8, a: f64, l_max: u64) -> Estimate<f64> {
    let tables = KernelTables::global();
    let abs = delta.unsigned_abs() as f64;
    let sqrt_delta = abs.sqrt();
    let mut total = 0.0;
    let mut err = 0.0;
    for f in divisors_with_square_cofactor(delta) {
        let ff = f as f64;
        let f2 = ff * ff;
        let chi = character_table(delta / (f * f) as i64);
        let q = chi.len() as u64;
        let (r_f, r_h) = (f2 / a, f2 * a / abs);
        let n = afe_terms(r_f, r_h, l_max);
        let mut inner = 0.0;
        let mut mass = 0.0;
        for l in 1..=n {
            let c = chi[(l % q) as usize];
            if c == 0 {
                continue;
            }
            let lf = l as f64;
            let t = (tables.f(lf * r_f) + lf * f2 / sqrt_delta * tables.h(iota, lf * r_h)) / lf;
            inner += c as f64 * t;
            mass += t.abs();
        }
        total += inner / ff;
        err += afe_tail(ff, sqrt_delta, r_f, r_h, n) + 1e-12 * mass / ff;
    }
    Estimate::new(total, err)
}

/// The AFE at a general point:
///
///   L(z, delta) = sum' f^{1-2z} sum_l chi(l) l^{-z} F(lf^2/A)
///               + |delta|^{1/2-z} sum' f^{2z-1} sum_l chi(l) l^{z-1} H_{iota,z}(lf^2 A/|delta|)
///
/// where H_{iota,z} is the dual kernel of [`DualKernel`], taken on the line
/// Re(u) = max(Re z, 1 - Re z) + 1/2. The H tail uses the z = 1 envelope.
pub fn afe(z: Complex64, delta: &Discriminant, budget: &TruncationBudget) -> Result<Estimate<Complex64>> {
    if (z - 1.0).norm() < 1e-15 {
        let r = afe_l1(delta, budget)?;
        return Ok(Estimate::new(Complex64::new(r.value, 0.0), r.error));
    }
    if delta.is_square() {
        return Err(Error::domain(format!("no AFE at the square discriminant {}", delta.value)));
    }
    let c = z.re.max(1.0 - z.re).max(0.0) + 0.5;
    let height = budget.contour.height;
    let step = budget.contour.step;
    let line = ContourSpec { kind: ContourKind::Line { c }, height, step };
    let kernel = DualKernel::new(delta.iota, z, &line)?;
    let tables = KernelTables::global();
    let abs = delta.value.unsigned_abs() as f64;
    let sqrt_delta = abs.sqrt();
    let a = split_point(delta, budget);
    let dual_pre = ((0.5 - z) * abs.ln()).exp();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for f in divisors_with_square_cofactor(delta.value) {
        let ff = f as f64;
        let f2 = ff * ff;
        let lnf = ff.ln();
        let chi = character_table(delta.value / (f * f) as i64);
        let q = chi.len() as u64;
        let (r_f, r_h) = (f2 / a, f2 * a / abs);
        let n = afe_terms(r_f, r_h, budget.l_max);
        let mut first = Complex64::new(0.0, 0.0);
        let mut second = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for l in 1..=n {
            let ch = chi[(l % q) as usize];
            if ch == 0 {
                continue;
            }
            let lnl = (l as f64).ln();
            let lf = l as f64;
            let fv = tables.f(lf * r_f);
            if fv != 0.0 {
                first += (-z * lnl).exp() * (ch as f64 * fv);
            }
            let y = lf * r_h;
            let hv = kernel.eval(y);
            second += ((z - 1.0) * lnl).exp() * hv * ch as f64;
            mass += kernel.tail(y) * lf.powf(z.re - 1.0);
        }
        let w1 = (-(2.0 * z - 1.0) * lnf).exp();
        let w2 = dual_pre * ((2.0 * z - 1.0) * lnf).exp();
        total += w1 * first + w2 * second;
        // the envelope bound carries the factors |l^{z-1}| and f^{2 Re z - 1}
        // relative to the z = 1 case
        let tail = afe_tail(ff, sqrt_delta, r_f, r_h, n) * (n as f64).powf((z.re - 1.0).abs()) * ff.powf((2.0 * z.re - 2.0).abs());
        err += tail * (1.0 + dual_pre.norm() * sqrt_delta) + w2.norm() * mass + 1e-13 * (w1.norm() * first.norm() + w2.norm() * second.norm());
    }
    Ok(Estimate::new(total, err))
}
