//! The elliptic part of the trace formula for the Hecke operator at p^k,
//!
//!   E = sum_{+,-} sum_m theta(m / 2p^{k/2}) L(1, m^2 -+ 4p^k),
//!
//! over traces m whose discriminant is not a square, together with the
//! pieces of its rewriting: the square-trace correction, the Poisson-summed
//! form, the zero-frequency slice and its closed form, and the values of the
//! trivial representation and the Eisenstein residues.
//!
//! `Sign::Plus` is det = +p^k with t = x^2 - 1 and `Sign::Minus` is
//! det = -p^k with t = x^2 + 1, where x = m / (2p^{k/2}).

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::{decompose, enumerate_square_traces, is_prime, kronecker_table, ClassSource, Computed, Sign};
use crate::charsum::{kl_all_frequencies_from, Admissible};
use crate::lfun::{afe_l1_sum, LMethod, LValueRequest, TruncationBudget};
use crate::specfun::{f_envelope, gamma_ratio, gauss_kronrod, h_envelope, mellin_f, tanh_sinh_dist, zeta, zeta_real, zeta_recip, ContourSpec, KernelTables, QuadratureSpec};
use crate::{Error, Estimate, Result, VerificationReport};

const PI: f64 = std::f64::consts::PI;

/// A C-infinity bump amplitude * poly(x - center) * exp(-1 / (1 - z^2)),
/// z = (x - center) / radius, vanishing for |z| >= 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
    /// Coefficients of the polynomial in (x - center), lowest degree first;
    /// empty means 1.
    pub modulation: Vec<f64>,
}

impl Bump {
    pub fn new(center: f64, radius: f64, amplitude: f64) -> Self {
        Bump { center, radius, amplitude, modulation: Vec::new() }
    }

    pub fn modulated(mut self, coefficients: Vec<f64>) -> Self {
        self.modulation = coefficients;
        self
    }

    /// Largest |x| where the bump can be nonzero.
    pub fn reach(&self) -> f64 {
        self.center.abs() + self.radius
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.center;
        let z = u / self.radius;
        if !(z.abs() < 1.0) {
            return 0.0;
        }
        let poly = if self.modulation.is_empty() { 1.0 } else { self.modulation.iter().rev().fold(0.0, |acc, c| acc * u + c) };
        self.amplitude * poly * (-1.0 / (1.0 - z * z)).exp()
    }
}

/// The archimedean test functions
///
///   theta^-+(x) = 2 |x^2 +- 1|^{1/2} g_1^-+(x) + g_2^-+(x),
///
/// each g a finite sum of bumps. g_1 of the minus sign is identically zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaPair {
    pub g1_plus: Vec<Bump>,
    pub g2_plus: Vec<Bump>,
    pub g2_minus: Vec<Bump>,
    pub support_radius: f64,
}

impl Default for ThetaPair {
    fn default() -> Self {
        ThetaPair::standard(0.0, 2.0)
    }
}

impl ThetaPair {
    pub fn new(g1_plus: Vec<Bump>, g2_plus: Vec<Bump>, g2_minus: Vec<Bump>) -> Result<Self> {
        let reach = g1_plus.iter().chain(&g2_plus).chain(&g2_minus).map(Bump::reach).fold(0.0, f64::max);
        let t = ThetaPair { g1_plus, g2_plus, g2_minus, support_radius: if reach > 0.0 { reach } else { 1.0 } };
        t.validate()?;
        Ok(t)
    }

    /// All three components equal to the unit bump at (center, radius).
    pub fn standard(center: f64, radius: f64) -> Self {
        let b = Bump::new(center, radius, 1.0);
        ThetaPair { g1_plus: vec![b.clone()], g2_plus: vec![b.clone()], g2_minus: vec![b], support_radius: center.abs() + radius }
    }

    pub fn zero() -> Self {
        ThetaPair { g1_plus: Vec::new(), g2_plus: Vec::new(), g2_minus: Vec::new(), support_radius: 1.0 }
    }

    /// theta_a + theta_b, componentwise.
    pub fn sum(&self, other: &ThetaPair) -> ThetaPair {
        let cat = |a: &Vec<Bump>, b: &Vec<Bump>| a.iter().chain(b).cloned().collect::<Vec<_>>();
        ThetaPair {
            g1_plus: cat(&self.g1_plus, &other.g1_plus),
            g2_plus: cat(&self.g2_plus, &other.g2_plus),
            g2_minus: cat(&self.g2_minus, &other.g2_minus),
            support_radius: self.support_radius.max(other.support_radius),
        }
    }

    pub fn scaled(&self, c: f64) -> ThetaPair {
        let sc = |v: &Vec<Bump>| v.iter().map(|b| Bump { amplitude: b.amplitude * c, ..b.clone() }).collect::<Vec<_>>();
        ThetaPair { g1_plus: sc(&self.g1_plus), g2_plus: sc(&self.g2_plus), g2_minus: sc(&self.g2_minus), support_radius: self.support_radius }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_radius > 0.0 && self.support_radius.is_finite()) {
            return Err(Error::domain("support radius must be positive"));
        }
        for b in self.g1_plus.iter().chain(&self.g2_plus).chain(&self.g2_minus) {
            if !(b.radius > 0.0 && b.center.is_finite() && b.amplitude.is_finite()) {
                return Err(Error::domain(format!("bad bump {b:?}")));
            }
            if b.reach() > self.support_radius * (1.0 + 1e-15) {
                return Err(Error::domain(format!("bump reaches {} beyond the support radius {}", b.reach(), self.support_radius)));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.g1_plus.iter().chain(&self.g2_plus).chain(&self.g2_minus).all(|b| b.amplitude == 0.0)
    }

    pub fn g1(&self, sign: Sign, x: f64) -> f64 {
        match sign {
            Sign::Plus => self.g1_plus.iter().map(|b| b.eval(x)).sum(),
            Sign::Minus => 0.0,
        }
    }

    pub fn g2(&self, sign: Sign, x: f64) -> f64 {
        let v = match sign {
            Sign::Plus => &self.g2_plus,
            Sign::Minus => &self.g2_minus,
        };
        v.iter().map(|b| b.eval(x)).sum()
    }

    /// theta at x given |t| = |x^2 -+ 1|, which callers near t = 0 can
    /// supply more accurately than x alone.
    pub fn eval_at(&self, sign: Sign, x: f64, abs_t: f64) -> f64 {
        let g1 = self.g1(sign, x);
        let head = if g1 == 0.0 { 0.0 } else { 2.0 * abs_t.sqrt() * g1 };
        head + self.g2(sign, x)
    }

    pub fn eval(&self, sign: Sign, x: f64) -> f64 {
        self.eval_at(sign, x, sign.quad(x).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticInstance {
    pub p: u64,
    pub k: u32,
    pub theta: ThetaPair,
    pub budget: TruncationBudget,
}

/// Largest p^k accepted; keeps every discriminant inside i64.
pub const MAX_PK: u64 = 1 << 40;

impl EllipticInstance {
    pub fn new(p: u64, k: u32, theta: ThetaPair, budget: TruncationBudget) -> Result<Self> {
        let inst = EllipticInstance { p, k, theta, budget };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::domain(format!("p = {} is not prime", self.p)));
        }
        if self.k == 0 {
            return Err(Error::domain("k must be positive"));
        }
        match self.p.checked_pow(self.k) {
            Some(pk) if pk <= MAX_PK => {}
            _ => return Err(Error::Bound { what: "p^k", value: (self.p as u128).saturating_pow(self.k), bound: MAX_PK as u128 }),
        }
        self.theta.validate()?;
        self.budget.validate()
    }

    pub fn pk(&self) -> u64 {
        self.p.pow(self.k)
    }

    /// p^{k/2}.
    pub fn root_pk(&self) -> f64 {
        (self.p as f64).powf(self.k as f64 / 2.0)
    }

    /// 2 p^{k/2}, so that x = m / scale.
    pub fn scale(&self) -> f64 {
        2.0 * self.root_pk()
    }

    /// Largest |m| with m / scale strictly inside the support.
    pub fn trace_bound(&self) -> i64 {
        let b = self.scale() * self.theta.support_radius;
        let m = b.floor() as i64;
        if m as f64 == b {
            m - 1
        } else {
            m
        }
    }

    fn kernel(&self) -> Smoother {
        let four_pk = 4.0 * self.pk() as f64;
        let alpha = self.budget.alpha;
        Smoother { alpha, a1: four_pk.powf(-alpha), a2: four_pk.powf(alpha - 1.0), inv_root: 1.0 / self.root_pk(), tables: KernelTables::global() }
    }
}

/// The AFE weights of one (l, f) pair as a function of x:
/// F(Q a1 / |t|^alpha) + Q p^{-k/2} / (2 sqrt|t|) H_iota(Q a2 / |t|^{1-alpha}),
/// Q = lf^2, a1 = (4p^k)^{-alpha}, a2 = (4p^k)^{alpha-1}.
struct Smoother {
    alpha: f64,
    a1: f64,
    a2: f64,
    inv_root: f64,
    tables: &'static KernelTables,
}

impl Smoother {
    fn weight(&self, q: f64, t: f64) -> f64 {
        let at = t.abs();
        if at == 0.0 {
            return 0.0;
        }
        let ln_t = at.ln();
        let yf = q * self.a1 * (-self.alpha * ln_t).exp();
        let yh = q * self.a2 * (-(1.0 - self.alpha) * ln_t).exp();
        let iota = u8::from(t < 0.0);
        let h = self.tables.h(iota, yh);
        let hterm = if h == 0.0 { 0.0 } else { q * self.inv_root / (2.0 * at.sqrt()) * h };
        self.tables.f(yf) + hterm
    }

    /// Upper bound for |weight(q, t)| from the kernel envelopes.
    fn weight_bound(&self, q: f64, t: f64) -> f64 {
        let at = t.abs();
        if at == 0.0 {
            return 0.0;
        }
        let yf = q * self.a1 * at.powf(-self.alpha);
        let yh = q * self.a2 * at.powf(self.alpha - 1.0);
        let h = h_envelope(yh);
        let hterm = if h == 0.0 { 0.0 } else { q * self.inv_root / (2.0 * at.sqrt()) * h };
        f_envelope(yf) + hterm
    }
}

/// A real value with an error estimate and any warnings raised on the way.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideValue {
    pub value: f64,
    pub error: f64,
    pub warnings: Vec<String>,
}

fn zero_trace_warning(sign: Sign, pk: u64, m: i64) -> String {
    let n = sign.det(pk);
    format!("trace m = {m} with det {n} has discriminant 0; the weighted L-value diverges there and the term is excluded")
}

/// The direct elliptic part with every L-value from the class number
/// formula.
pub fn direct_elliptic(inst: &EllipticInstance) -> Result<SideValue> {
    direct_elliptic_with(inst, &Computed)
}

pub fn direct_elliptic_with(inst: &EllipticInstance, src: &impl ClassSource) -> Result<SideValue> {
    inst.validate()?;
    let pk = inst.pk();
    let s = inst.scale();
    let mb = inst.trace_bound();
    let one = Complex64::new(1.0, 0.0);
    let (mut total, mut err) = (0.0, 0.0);
    let mut warnings = Vec::new();
    for sign in Sign::BOTH {
        let n = sign.det(pk);
        for m in -mb..=mb {
            let th = inst.theta.eval(sign, m as f64 / s);
            if th == 0.0 {
                continue;
            }
            let delta = m * m - 4 * n;
            assert!(matches!(delta.rem_euclid(4), 0 | 1), "discriminant {delta} is not 0 or 1 mod 4");
            if delta == 0 {
                warnings.push(zero_trace_warning(sign, pk, m));
                continue;
            }
            let d = decompose(delta)?;
            if d.is_square() {
                continue;
            }
            let l = LValueRequest::new(one, d, LMethod::ClassNumberFormula, inst.budget)?.evaluate_with(src)?;
            total += th * l.value.re;
            err += th.abs() * l.error;
        }
    }
    Ok(SideValue { value: total, error: err, warnings })
}

/// The square-trace correction: for each m with m^2 -+ 4p^k = r^2 > 0,
/// theta(m / 2p^{k/2}) times the z = 1 AFE sum at delta = r^2 with
/// A = r^{2 alpha}.
pub fn sigma_square(inst: &EllipticInstance) -> Result<SideValue> {
    inst.validate()?;
    let pk = inst.pk();
    let s = inst.scale();
    let (mut total, mut err) = (0.0, 0.0);
    let mut warnings = Vec::new();
    for sign in Sign::BOTH {
        for tr in enumerate_square_traces(sign.det(pk)) {
            let x = tr.m as f64 / s;
            let abs_t = (tr.root as f64).powi(2) / (4.0 * pk as f64);
            let th = inst.theta.eval_at(sign, x, abs_t);
            if th == 0.0 {
                continue;
            }
            if tr.is_zero_discriminant() {
                warnings.push(zero_trace_warning(sign, pk, tr.m));
                continue;
            }
            let delta = (tr.root * tr.root) as i64;
            let a = (delta as f64).powf(inst.budget.alpha);
            let e = afe_l1_sum(delta, 0, a, inst.budget.l_max);
            total += th * e.value;
            err += th.abs() * e.error;
        }
    }
    Ok(SideValue { value: total, error: err, warnings })
}

/// Which (l, f) pairs to keep for one sign, from a sup bound B(Q) of
/// |theta(x)| times the AFE weight envelope at Q = lf^2 over a grid in x.
struct PairSchedule {
    /// (f, number of l kept)
    rows: Vec<(u64, u64)>,
    /// Bound on the discarded pairs, in units of `weight`.
    tail: f64,
    warnings: Vec<String>,
}

struct ThetaGrid {
    points: Vec<(f64, f64)>,
}

impl ThetaGrid {
    fn new(inst: &EllipticInstance, sign: Sign) -> Self {
        let r = inst.theta.support_radius;
        let n = 4001;
        let h = 2.0 * r / n as f64;
        let points = (0..n)
            .filter_map(|i| {
                let x = -r + (i as f64 + 0.5) * h;
                let th = inst.theta.eval(sign, x).abs();
                (th > 0.0).then(|| (th, sign.quad(x)))
            })
            .collect();
        ThetaGrid { points }
    }

    fn bound(&self, k: &Smoother, q: f64) -> f64 {
        self.points.iter().map(|&(th, t)| th * k.weight_bound(q, t)).fold(0.0, f64::max)
    }
}

/// Pairs are kept while weight * B(lf^2) / (f l) >= eps. The discarded
/// l-tail of each f and the discarded f rows are summed from the same
/// bound until the terms fall below eps * 1e-8.
fn schedule(inst: &EllipticInstance, sign: Sign, weight: f64, eps: f64) -> PairSchedule {
    let k = inst.kernel();
    let grid = ThetaGrid::new(inst, sign);
    let term = |f: u64, l: u64| weight * grid.bound(&k, (l * f * f) as f64) / (f * l) as f64;
    let mut rows = Vec::new();
    let mut tail = 0.0;
    let mut warnings = Vec::new();
    let l_cap = inst.budget.l_max;
    let f_cap = inst.budget.f_max;
    let tail_of_row = |f: u64, from: u64| -> f64 {
        let mut s = 0.0;
        let mut l = from;
        loop {
            let t = term(f, l);
            s += t;
            if t < eps * 1e-8 || l > from + 100_000 {
                break;
            }
            l += 1;
        }
        s
    };
    let mut f = 1;
    loop {
        if term(f, 1) < eps {
            // remaining rows, each summed over l
            let mut g = f;
            loop {
                let row = tail_of_row(g, 1);
                tail += row;
                if row < eps * 1e-8 || g > f + 10_000 {
                    break;
                }
                g += 1;
            }
            break;
        }
        if f > f_cap {
            warnings.push(format!("f cutoff {f_cap} reached before the pair bound fell below {eps:e}"));
            tail += (f..f + 1000).map(|g| tail_of_row(g, 1)).sum::<f64>();
            break;
        }
        let mut l = 1;
        while term(f, l) >= eps && l < l_cap {
            l += 1;
        }
        if l >= l_cap {
            warnings.push(format!("l cutoff {l_cap} reached at f = {f}"));
        }
        // keep 1..l-1; the first discarded is l
        let kept = l - 1;
        rows.push((f, kept));
        tail += tail_of_row(f, l);
        f += 1;
    }
    PairSchedule { rows, tail, warnings }
}

/// Poisson contribution of one (sign, f, l) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairTerm {
    pub sign: Sign,
    pub f: u64,
    pub l: u64,
    /// Sum over all kept frequencies.
    pub value: f64,
    /// The xi = 0 term alone.
    pub xi0: f64,
    /// Change under the last doubling of the frequency range.
    pub error: f64,
    /// Frequencies kept: |xi| <= eta * 4lf^2.
    pub eta: f64,
    /// Real parts of the terms at xi = -HEAD_XI..=HEAD_XI, for export.
    pub head: Vec<(i64, f64)>,
}

pub const HEAD_XI: i64 = 16;

/// The Poisson-summed elliptic part, split into its pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonSide {
    pub value: f64,
    pub error: f64,
    /// Sum of the xi = 0 terms (Riemann sums of the x-integrals).
    pub xi0: f64,
    /// Sum of the xi != 0 terms.
    pub xi_nonzero: f64,
    /// Bound on the pairs not computed.
    pub pair_tail: f64,
    pub pairs: Vec<PairTerm>,
    pub warnings: Vec<String>,
}

/// Smallest eta tried before doubling.
const ETA_START: f64 = 4.0;

/// Per-pair target for the doubling test, absolute.
const PAIR_XI_TOL: f64 = 1e-9;

/// Per-pair cutoff on the bound of discarded pairs.
const PAIR_EPS: f64 = 1e-11;

/// Poisson summation over m in each (l, f) pair:
///
///   sum_m w(m) Phi(m) = (1/q) sum_xi Kl_{l,f}(xi) Phi^(xi / q),  q = 4lf^2,
///
/// with Phi(t) the smoothed theta at x = t / 2p^{k/2} and w the Kronecker
/// weights, so the pair contributes (1/(fl q)) sum_xi Kl(xi) Phi^(xi/q).
/// Phi^ is the Riemann sum on the grid t = j / (4 eta), folded modulo
/// q and transformed by one FFT of length 4 eta q, which gives every
/// |xi| <= eta q at once. eta doubles from 4 until the pair changes by less
/// than 1e-9, up to the budget's xi_max.
pub fn poisson_rhs(inst: &EllipticInstance) -> Result<PoissonSide> {
    inst.validate()?;
    let pk = inst.pk();
    let s = inst.scale();
    let r = inst.theta.support_radius;
    let k = inst.kernel();
    let mut planner = FftPlanner::<f64>::new();
    let mut out = PoissonSide { value: 0.0, error: 0.0, xi0: 0.0, xi_nonzero: 0.0, pair_tail: 0.0, pairs: Vec::new(), warnings: Vec::new() };
    if inst.theta.is_zero() {
        return Ok(out);
    }
    let lattice = (2 * inst.trace_bound() + 1) as f64;
    for sign in Sign::BOTH {
        let n = sign.det(pk);
        let sched = schedule(inst, sign, lattice, PAIR_EPS);
        out.pair_tail += sched.tail;
        out.warnings.extend(sched.warnings);
        for &(f, l_count) in &sched.rows {
            let adm = Admissible::new(f, n);
            for l in 1..=l_count {
                let term = poisson_pair(inst, &k, sign, &adm, l, s, r, &mut planner);
                if term.eta >= inst.budget.xi_max && term.error > PAIR_XI_TOL {
                    out.warnings.push(format!("xi tail not settled for ({sign:?}, f={f}, l={l}): change {:.2e} at eta {}", term.error, term.eta));
                }
                out.value += term.value;
                out.error += term.error;
                out.xi0 += term.xi0;
                out.pairs.push(term);
            }
        }
    }
    out.xi_nonzero = out.value - out.xi0;
    out.error += out.pair_tail;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn poisson_pair(inst: &EllipticInstance, k: &Smoother, sign: Sign, adm: &Admissible, l: u64, s: f64, r: f64, planner: &mut FftPlanner<f64>) -> PairTerm {
    let f = adm.f;
    let qq = (l * f * f) as f64;
    let q = 4 * l * f * f;
    let kl = kl_all_frequencies_from(adm, l, planner);
    let norm = 1.0 / ((f * l) as f64 * q as f64);
    let mut term = PairTerm { sign, f, l, value: 0.0, xi0: 0.0, error: 0.0, eta: 0.0, head: Vec::new() };
    if kl.iter().all(|c| c.norm() < 0.5) {
        // weights all zero: no admissible residues
        return term;
    }
    let mut eta = ETA_START;
    let mut prev: Option<f64> = None;
    loop {
        let nn = (4.0 * eta) as u64 * q;
        let h = 1.0 / (4.0 * eta);
        let mut buf = vec![Complex64::new(0.0, 0.0); nn as usize];
        let jmax = (s * r / h).floor() as i64;
        for j in -jmax..=jmax {
            let t = j as f64 * h;
            let x = t / s;
            let th = inst.theta.eval(sign, x);
            if th == 0.0 {
                continue;
            }
            let v = th * k.weight(qq, sign.quad(x));
            buf[j.rem_euclid(nn as i64) as usize].re += v;
        }
        planner.plan_fft_forward(nn as usize).process(&mut buf);
        let xi_top = (eta as u64 * q) as i64;
        let at = |xi: i64| -> Complex64 { kl[xi.rem_euclid(q as i64) as usize] * buf[xi.rem_euclid(nn as i64) as usize] * (h * norm) };
        let zero = at(0).re;
        let mut sum = zero;
        for xi in 1..=xi_top {
            sum += at(-xi).re + at(xi).re;
        }
        term.xi0 = zero;
        term.value = sum;
        term.eta = eta;
        term.head = (-HEAD_XI..=HEAD_XI).map(|xi| (xi, at(xi).re)).collect();
        if let Some(p) = prev {
            term.error = (sum - p).abs();
            if term.error <= PAIR_XI_TOL || 2.0 * eta > inst.budget.xi_max {
                break;
            }
        } else if 2.0 * eta > inst.budget.xi_max {
            term.error = sum.abs();
            break;
        }
        prev = Some(sum);
        eta *= 2.0;
    }
    term
}

/// Integration pieces of [-R, R] split at the zeros of x^2 -+ 1, each with
/// the exact |t| as a function of the distances to its ends.
fn pieces(sign: Sign, r: f64) -> Vec<(f64, f64, fn(f64, f64, f64) -> f64)> {
    fn outer_right(_: f64, da: f64, _: f64) -> f64 {
        da * (2.0 + da)
    }
    fn outer_left(_: f64, _: f64, db: f64) -> f64 {
        db * (2.0 + db)
    }
    fn inner(_: f64, da: f64, db: f64) -> f64 {
        da * db
    }
    fn minus(x: f64, _: f64, _: f64) -> f64 {
        x * x + 1.0
    }
    match sign {
        Sign::Minus => vec![(-r, r, minus as fn(f64, f64, f64) -> f64)],
        Sign::Plus if r <= 1.0 => vec![(-r, r, (|x: f64, _: f64, _: f64| 1.0 - x * x) as fn(f64, f64, f64) -> f64)],
        Sign::Plus => vec![(-r, -1.0, outer_left as fn(f64, f64, f64) -> f64), (-1.0, 1.0, inner), (1.0, r, outer_right)],
    }
}

/// Whether t = x^2 -+ 1 is negative on the piece starting at `a`.
fn piece_negative(sign: Sign, a: f64, r: f64) -> bool {
    sign == Sign::Plus && (a == -1.0 || r <= 1.0)
}

/// sum_+- int over the pieces of `g(sign, x, |t|, t < 0)` by tanh-sinh.
fn integrate_pieces(inst: &EllipticInstance, rel_tol: f64, g: impl Fn(Sign, f64, f64, bool) -> f64) -> Result<Estimate<f64>> {
    let r = inst.theta.support_radius;
    let spec = QuadratureSpec::with_tol(1e-300, rel_tol);
    let (mut v, mut e) = (0.0, 0.0);
    for sign in Sign::BOTH {
        for (a, b, tabs) in pieces(sign, r) {
            let neg = piece_negative(sign, a, r);
            let est = tanh_sinh_dist(|x, da, db| g(sign, x, tabs(x, da, db), neg), a, b, &spec)?;
            v += est.value;
            e += est.error;
        }
    }
    Ok(Estimate::new(v, e))
}

/// sum_j p^{-j u}, j = 0..k.
fn p_poly(p: u64, k: u32, u: Complex64) -> Complex64 {
    let step = (-u * (p as f64).ln()).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for _ in 0..=k {
        acc += pow;
        pow *= step;
    }
    acc
}

/// The trivial representation: 2 p^{k/2} (1 - p^{-(k+1)}) / (1 - p^{-1})
/// times sum_+- int theta.
pub fn trivial_rep_value(inst: &EllipticInstance) -> Result<Estimate<f64>> {
    inst.validate()?;
    let factor = 2.0 * inst.root_pk() * p_poly(inst.p, inst.k, Complex64::new(1.0, 0.0)).re;
    let theta = &inst.theta;
    let i = integrate_pieces(inst, 1e-13, |sign, x, at, _| theta.eval_at(sign, x, at))?;
    Ok(Estimate::new(factor * i.value, factor * i.error))
}

/// sum_+- int_{t > 0} theta / sqrt(t).
fn theta_over_root(inst: &EllipticInstance) -> Result<Estimate<f64>> {
    let theta = &inst.theta;
    integrate_pieces(inst, 1e-12, |sign, x, at, neg| if neg { 0.0 } else { theta.eval_at(sign, x, at) / at.sqrt() })
}

/// The Eisenstein residues: (k+1)/2 sum_+- int_{t > 0} theta / sqrt(t).
pub fn eisenstein_residue_value(inst: &EllipticInstance) -> Result<Estimate<f64>> {
    inst.validate()?;
    let c = (inst.k + 1) as f64 / 2.0;
    let i = theta_over_root(inst)?;
    Ok(Estimate::new(c * i.value, c * i.error))
}

/// The xi = 0 slice term by term:
///
///   (p^{k/2}/2) sum_+- sum_f f^{-3} sum_l l^{-2} Kl_{l,f}(0, +-p^k) int theta(x) [F + H term] dx.
pub fn xi0_series(inst: &EllipticInstance) -> Result<SideValue> {
    inst.validate()?;
    let pk = inst.pk();
    let half = inst.root_pk() / 2.0;
    let k = inst.kernel();
    let mut out = SideValue { value: 0.0, error: 0.0, warnings: Vec::new() };
    if inst.theta.is_zero() {
        return Ok(out);
    }
    let r = inst.theta.support_radius;
    // |pair| <= (p^{k/2}/2) 4lf^2 / (f^3 l^2) * 2R * B
    let weight = 4.0 * inst.root_pk() * r;
    let theta = &inst.theta;
    for sign in Sign::BOTH {
        let n = sign.det(pk);
        let sched = schedule(inst, sign, weight, PAIR_EPS);
        out.error += sched.tail;
        out.warnings.extend(sched.warnings);
        let l_top = sched.rows.iter().map(|r| r.1).max().unwrap_or(0);
        let tables: Vec<Vec<i8>> = (1..=l_top).map(kronecker_table).collect();
        for &(f, l_count) in &sched.rows {
            let adm = Admissible::new(f, n);
            for l in 1..=l_count {
                let kl0 = adm.kl0(l, &tables[l as usize - 1]);
                if kl0 == 0 {
                    continue;
                }
                let qq = (l * f * f) as f64;
                let i = integrate_sign(inst, sign, 1e-12, |x, at, neg| {
                    let t = if neg { -at } else { at };
                    theta.eval_at(sign, x, at) * k.weight(qq, t)
                })?;
                let c = half * kl0 as f64 / ((f * f * f) as f64 * (l * l) as f64);
                out.value += c * i.value;
                out.error += c.abs() * i.error;
            }
        }
    }
    Ok(out)
}

/// int over [-R, R] for one sign, split at the zeros of t, by adaptive
/// Gauss-Kronrod (the smoothed integrands are flat at t = 0).
fn integrate_sign(inst: &EllipticInstance, sign: Sign, rel_tol: f64, g: impl Fn(f64, f64, bool) -> f64) -> Result<Estimate<f64>> {
    let r = inst.theta.support_radius;
    let spec = QuadratureSpec { abs_tol: 1e-16, rel_tol, max_subdivisions: 20_000, ..QuadratureSpec::default() };
    let (mut v, mut e) = (0.0, 0.0);
    for (a, b, _) in pieces(sign, r) {
        let neg = piece_negative(sign, a, r);
        let est = gauss_kronrod(|x| g(x, sign.quad(x).abs(), neg), a, b, &spec)?;
        v += est.value;
        e += est.error;
    }
    Ok(Estimate::new(v, e))
}

/// Precomputed u-integrals of the closed form, as weighted node sums
/// I(y) = sum_j W_j y^{-u_j}.
struct ContourSums {
    /// On Re u = -1: F~(u) zeta(2u+2)/zeta(u+2) P(u+1) / (2 pi i).
    line: Vec<(Complex64, Complex64)>,
    line_coarse: Vec<(Complex64, Complex64)>,
    /// On the indented path, per iota: F~(u) G_iota(u) zeta(2u)/zeta(u+1) P(u) / (2 pi i).
    indented: [Vec<(Complex64, Complex64)>; 2],
    indented_coarse: [Vec<(Complex64, Complex64)>; 2],
    /// Residue data for the large-argument closed forms.
    p1: f64,
    half_res: f64,
    mellin_half: f64,
    k: u32,
}

/// F(Q y) < e^{-40} past this: the Re u = -1 integral is minus its residues.
const LINE_RESIDUE_CUT: f64 = 40.0;
/// H(Q y) below the envelope 6 e^{-3.5 sqrt(121)} past this.
const INDENTED_RESIDUE_CUT: f64 = 121.0;

impl ContourSums {
    fn new(inst: &EllipticInstance) -> Result<Self> {
        let (p, k) = (inst.p, inst.k);
        let c = &inst.budget.contour;
        let line_spec = ContourSpec::line(-1.0).with_height(c.height).with_step(c.step);
        let ind_spec = ContourSpec::indented(inst.budget.upsilon).with_height(c.height).with_step(c.step);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let one = Complex64::new(1.0, 0.0);
        let line_nodes = |spec: &ContourSpec| -> Result<Vec<(Complex64, Complex64)>> {
            spec.nodes()
                .into_iter()
                .map(|(u, w)| {
                    let z = zeta(2.0 * u + 2.0)? * zeta_recip(u + 2.0) * p_poly(p, k, u + one);
                    Ok((u, w * mellin_f(u)? * z / two_pi_i))
                })
                .collect()
        };
        let ind_nodes = |spec: &ContourSpec, iota: u8| -> Result<Vec<(Complex64, Complex64)>> {
            spec.nodes()
                .into_iter()
                .map(|(u, w)| {
                    let zeta_shift = zeta(u + one)?;
                    if zeta_shift.norm() < 1e-8 {
                        return Err(Error::Pole { what: "1/zeta(1+u) on the indented contour", at: format!("{u}") });
                    }
                    let z = zeta(2.0 * u)? / zeta_shift * p_poly(p, k, u);
                    Ok((u, w * mellin_f(u)? * gamma_ratio(iota, u)? * z / two_pi_i))
                })
                .collect()
        };
        let coarse_line = line_spec.with_step(2.0 * line_spec.step);
        let coarse_ind = ind_spec.with_step(2.0 * ind_spec.step);
        Ok(ContourSums {
            line: line_nodes(&line_spec)?,
            line_coarse: line_nodes(&coarse_line)?,
            indented: [ind_nodes(&ind_spec, 0)?, ind_nodes(&ind_spec, 1)?],
            indented_coarse: [ind_nodes(&coarse_ind, 0)?, ind_nodes(&coarse_ind, 1)?],
            p1: p_poly(p, k, one).re,
            half_res: p_poly(p, k, Complex64::new(0.5, 0.0)).re / (2.0 * zeta_real(1.5)?),
            mellin_half: mellin_f(Complex64::new(0.5, 0.0))?.re,
            k,
        })
    }

    fn sum(nodes: &[(Complex64, Complex64)], ln_y: f64) -> f64 {
        nodes.iter().map(|&(u, w)| w * (-u * ln_y).exp()).sum::<Complex64>().re
    }

    /// (1/2 pi i) int_{(-1)} F~(u) y^{-u} zeta(2u+2)/zeta(u+2) P(u+1) du.
    fn line_integral(&self, y: f64, coarse: bool) -> f64 {
        if y >= LINE_RESIDUE_CUT {
            // minus the residues at u = 0 and u = -1/2; F~(-1/2) = -F~(1/2)
            return -(self.p1 - self.mellin_half * y.sqrt() * self.half_res);
        }
        Self::sum(if coarse { &self.line_coarse } else { &self.line }, y.ln())
    }

    /// (1/2 pi i) int_C F~(u) G_iota(u) w^{-u} zeta(2u)/zeta(u+1) P(u) du,
    /// with w = pi y.
    fn indented_integral(&self, iota: u8, y: f64, coarse: bool) -> f64 {
        let w = PI * y;
        if y >= INDENTED_RESIDUE_CUT {
            // minus the residues at u = 1/2 and, for iota = 0, at u = 0
            let at_zero = if iota == 0 { -((self.k + 1) as f64) / PI.sqrt() } else { 0.0 };
            return -(at_zero + self.mellin_half * self.half_res / w.sqrt());
        }
        let nodes = if coarse { &self.indented_coarse[iota as usize] } else { &self.indented[iota as usize] };
        Self::sum(nodes, w.ln())
    }
}

/// The pieces of the closed form of the xi = 0 slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Xi0Closed {
    /// 2 p^{k/2} P(1) sum int theta.
    pub trivial: Estimate<f64>,
    /// -(k+1) sum int_{t>0} theta / sqrt t.
    pub residue: Estimate<f64>,
    /// (p^{k/2}/2) sum int theta * 4 (line integral).
    pub line_term: Estimate<f64>,
    /// (p^{k/2}/2) sum int theta * 2 sqrt(pi) p^{-k/2} / sqrt|t| (indented integral).
    pub indented_term: Estimate<f64>,
    pub value: f64,
    pub error: f64,
}

/// The closed form of the xi = 0 slice: trivial-representation term, the
/// residue term at u = 0, and the two shifted u-integrals inside the
/// x-integral. Where the kernel arguments are large enough that the
/// Dirichlet-series side is below e^{-40}, the u-integrals are replaced by
/// minus their residues.
pub fn xi0_contour(inst: &EllipticInstance) -> Result<Xi0Closed> {
    inst.validate()?;
    let sums = ContourSums::new(inst)?;
    let four_pk = 4.0 * inst.pk() as f64;
    let alpha = inst.budget.alpha;
    let (a1, a2) = (four_pk.powf(-alpha), four_pk.powf(alpha - 1.0));
    let half = inst.root_pk() / 2.0;
    let hpre = 2.0 * PI.sqrt() / inst.root_pk();
    let theta = &inst.theta;

    let trivial = trivial_rep_value(inst)?;
    let root = theta_over_root(inst)?;
    let kk = (inst.k + 1) as f64;
    let residue = Estimate::new(-kk * root.value, kk * root.error);

    let line_at = |x: f64, at: f64, coarse: bool, sign: Sign| -> f64 {
        let th = theta.eval_at(sign, x, at);
        if th == 0.0 || at == 0.0 {
            return 0.0;
        }
        half * th * 4.0 * sums.line_integral(a1 * at.powf(-alpha), coarse)
    };
    let ind_at = |x: f64, at: f64, neg: bool, coarse: bool, sign: Sign| -> f64 {
        let th = theta.eval_at(sign, x, at);
        if th == 0.0 || at == 0.0 {
            return 0.0;
        }
        half * th * hpre / at.sqrt() * sums.indented_integral(u8::from(neg), a2 * at.powf(alpha - 1.0), coarse)
    };
    let line = integrate_pieces(inst, 1e-10, |sign, x, at, _| line_at(x, at, false, sign))?;
    let ind = integrate_pieces(inst, 1e-10, |sign, x, at, neg| ind_at(x, at, neg, false, sign))?;

    // u-discretization: step-halving difference on a grid in x
    let r = inst.theta.support_radius;
    let mut disc_line: f64 = 0.0;
    let mut disc_ind: f64 = 0.0;
    for sign in Sign::BOTH {
        let n = 257;
        for i in 0..n {
            let x = -r + (i as f64 + 0.5) * 2.0 * r / n as f64;
            let t = sign.quad(x);
            let (at, neg) = (t.abs(), t < 0.0);
            disc_line = disc_line.max((line_at(x, at, false, sign) - line_at(x, at, true, sign)).abs());
            disc_ind = disc_ind.max((ind_at(x, at, neg, false, sign) - ind_at(x, at, neg, true, sign)).abs() * at.sqrt());
        }
    }
    // sup |difference| times the length, with the 1/sqrt|t| factor integrated
    let len = 2.0 * r;
    let line_term = Estimate::new(line.value, line.error + 2.0 * disc_line * len);
    let ind_term = Estimate::new(ind.value, ind.error + 2.0 * disc_ind * 2.0 * (len + 4.0));
    let value = trivial.value + residue.value + line_term.value + ind_term.value;
    let error = trivial.error + residue.error + line_term.error + ind_term.error;
    Ok(Xi0Closed { trivial, residue, line_term, indented_term: ind_term, value, error })
}

/// LHS and RHS of the end-to-end identity, with the pieces of the RHS.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub trivial: f64,
    pub eisenstein: f64,
    pub sigma_square: f64,
    /// (k+1)/2 sum int_{t>0} theta / sqrt t.
    pub half_residue: f64,
    pub line_term: f64,
    pub indented_term: f64,
    pub xi_nonzero: f64,
    pub error_budget: f64,
    pub warnings: Vec<String>,
}

/// direct_elliptic against
///
///   tr(1) - tr(xi_0) - Sigma(square) - (k+1)/2 sum int theta/sqrt
///     + line term + indented term + sum over xi != 0.
pub fn main_identity(inst: &EllipticInstance) -> Result<MainIdentity> {
    let direct = direct_elliptic(inst)?;
    let sq = sigma_square(inst)?;
    let closed = xi0_contour(inst)?;
    let eis = eisenstein_residue_value(inst)?;
    let pois = poisson_rhs(inst)?;
    let rhs = closed.trivial.value - eis.value - sq.value - eis.value + closed.line_term.value + closed.indented_term.value + pois.xi_nonzero;
    let mut warnings = direct.warnings;
    warnings.extend(sq.warnings);
    warnings.extend(pois.warnings);
    Ok(MainIdentity {
        lhs: direct.value,
        rhs,
        trivial: closed.trivial.value,
        eisenstein: eis.value,
        sigma_square: sq.value,
        half_residue: eis.value,
        line_term: closed.line_term.value,
        indented_term: closed.indented_term.value,
        xi_nonzero: pois.xi_nonzero,
        error_budget: direct.error + sq.error + closed.error + 2.0 * eis.error + pois.error,
        warnings,
    })
}

/// Relative tolerance of the end-to-end identity.
pub const MAIN_IDENTITY_TOL: f64 = 1e-3;

/// [`main_identity`] as a report: value is the RHS, oracle the direct side.
pub fn main_identity_check(inst: &EllipticInstance) -> Result<VerificationReport> {
    let m = main_identity(inst)?;
    let mut r = VerificationReport::new("main-identity", m.rhs, Some(m.lhs), m.error_budget, MAIN_IDENTITY_TOL)
        .with_budget(inst.budget)
        .with_detail("p", inst.p as f64)
        .with_detail("k", inst.k as f64)
        .with_detail("trivial", m.trivial)
        .with_detail("eisenstein", m.eisenstein)
        .with_detail("sigma_square", m.sigma_square)
        .with_detail("half_residue", m.half_residue)
        .with_detail("line_term", m.line_term)
        .with_detail("indented_term", m.indented_term)
        .with_detail("xi_nonzero", m.xi_nonzero);
    r.warnings = m.warnings;
    Ok(r)
}

/// Kernel applied in the smoothness check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingKernel {
    /// theta(x) F(c |x^2 - 1|^{-alpha})
    F,
    /// theta(x) |x^2 - 1|^{-1/2} H_iota(c |x^2 - 1|^{-(1-alpha)})
    H,
    /// theta(x) alone: the negative control.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeRow {
    pub point: f64,
    pub order: u8,
    pub steps: Vec<f64>,
    /// |central difference| at each step.
    pub values: Vec<f64>,
}

impl DerivativeRow {
    /// Non-increasing along the steps, strictly where nonzero.
    pub fn decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
    }

    /// Decreasing, and the last value is zero or below 1% of the first.
    pub fn vanishing(&self) -> bool {
        let (first, last) = (self.values[0], self.values[self.values.len() - 1]);
        self.decreasing() && (last == 0.0 || last <= 0.01 * first)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub kernel: SmoothingKernel,
    pub alpha: f64,
    pub scale: f64,
    pub rows: Vec<DerivativeRow>,
}

impl SmoothingReport {
    /// Every derivative sequence decreases toward zero.
    pub fn smooth(&self) -> bool {
        self.rows.iter().all(DerivativeRow::vanishing)
    }
}

pub const SMOOTHING_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Absolute evaluation noise assumed for the kernels; difference quotients
/// within 2^order * noise / h^order of zero are reported as zero.
pub const SMOOTHING_NOISE: f64 = 1e-16;

/// Default kernel argument scale c. At c = 1 the transition of the kernels
/// sits inside the step range for some alpha, so the third differences
/// first grow before they fall.
pub const SMOOTHING_SCALE: f64 = 5.0;

/// Central differences of orders 1-3 at x = +-1 of theta^+ times the
/// chosen kernel.
pub fn smoothing_check(theta: &ThetaPair, alpha: f64, kernel: SmoothingKernel) -> Result<SmoothingReport> {
    smoothing_check_scaled(theta, alpha, kernel, SMOOTHING_SCALE)
}

/// [`smoothing_check`] with kernel argument scale `c`.
pub fn smoothing_check_scaled(theta: &ThetaPair, alpha: f64, kernel: SmoothingKernel, c: f64) -> Result<SmoothingReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    theta.validate()?;
    let tables = KernelTables::global();
    let phi = |x: f64| -> f64 {
        let t = Sign::Plus.quad(x);
        let at = t.abs();
        let th = theta.eval_at(Sign::Plus, x, at);
        match kernel {
            SmoothingKernel::Raw => th,
            _ if at == 0.0 => 0.0,
            SmoothingKernel::F => th * tables.f(c * at.powf(-alpha)),
            SmoothingKernel::H => th / at.sqrt() * tables.h(u8::from(t < 0.0), c * at.powf(alpha - 1.0)),
        }
    };
    let mut rows = Vec::new();
    for point in [1.0, -1.0] {
        for order in 1..=3u8 {
            let values = SMOOTHING_STEPS
                .iter()
                .map(|&h| {
                    let d = match order {
                        1 => (phi(point + h) - phi(point - h)) / (2.0 * h),
                        2 => (phi(point + h) - 2.0 * phi(point) + phi(point - h)) / (h * h),
                        _ => (phi(point + 2.0 * h) - 2.0 * phi(point + h) + 2.0 * phi(point - h) - phi(point - 2.0 * h)) / (2.0 * h * h * h),
                    };
                    // below the roundoff of the difference quotient itself
                    let floor = SMOOTHING_NOISE * 2f64.powi(order as i32) / h.powi(order as i32);
                    if d.abs() <= floor {
                        0.0
                    } else {
                        d.abs()
                    }
                })
                .collect();
            rows.push(DerivativeRow { point, order, steps: SMOOTHING_STEPS.to_vec(), values });
        }
    }
    Ok(SmoothingReport { kernel, alpha, scale: c, rows })
}
