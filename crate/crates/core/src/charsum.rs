//! Twisted Kloosterman sums
//!
//!   Kl_{l,f}(xi, n) = sum over a mod 4lf^2 with f^2 | a^2 - 4n and
//!                     (a^2 - 4n)/f^2 = 0,1 mod 4 of ((a^2-4n)/f^2 / l) e(a xi / 4lf^2),
//!
//! the Dirichlet series D(z; n) = sum_f f^{-(2z+1)} sum_l Kl_{l,f}(0,n) l^{-(z+1)}
//! and its Euler product.
//!
//! The determinant n enters only through a^2 - 4n: n = +p^k gives the
//! discriminants m^2 - 4p^k and n = -p^k gives m^2 + 4p^k.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::{factorize, kronecker, kronecker_table, valuation};
use crate::specfun::zeta::zeta;
use crate::{Error, Estimate, Result};

/// Largest modulus 4lf^2 enumerated by a single call.
pub const DEFAULT_ENUMERATION_BOUND: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KloostermanSpec {
    pub l: u64,
    pub f: u64,
    pub xi: i64,
    pub n: i64,
}

impl KloostermanSpec {
    pub fn new(l: u64, f: u64, xi: i64, n: i64) -> Result<Self> {
        if l == 0 || f == 0 || n == 0 {
            return Err(Error::domain("Kloosterman sum needs l, f >= 1 and n != 0"));
        }
        Ok(KloostermanSpec { l, f, xi, n })
    }

    pub fn modulus(&self) -> u64 {
        4 * self.l * self.f * self.f
    }

    fn check_bound(&self, bound: u64) -> Result<()> {
        let q = 4u128 * self.l as u128 * (self.f as u128).pow(2);
        if q > bound as u128 {
            return Err(Error::Bound { what: "kl", value: q, bound: bound as u128 });
        }
        Ok(())
    }
}

/// e(num / den) with the numerator reduced first.
fn unit(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r)
}

/// Kl by enumerating every a mod 4lf^2.
pub fn kl(spec: KloostermanSpec) -> Result<Complex64> {
    kl_bounded(spec, DEFAULT_ENUMERATION_BOUND)
}

pub fn kl_bounded(spec: KloostermanSpec, bound: u64) -> Result<Complex64> {
    spec.check_bound(bound)?;
    let q = spec.modulus();
    let f2 = (spec.f * spec.f) as i128;
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..q as i128 {
        let d = a * a - 4 * spec.n as i128;
        if d % f2 != 0 {
            continue;
        }
        let e = d / f2;
        if !matches!(e.rem_euclid(4), 0 | 1) {
            continue;
        }
        let chi = kronecker(e.rem_euclid(4 * spec.l as i128) as i64, spec.l);
        if chi != 0 {
            s += unit(a * spec.xi as i128, q) * chi as f64;
        }
    }
    Ok(s)
}

/// The residues b mod 4f^2 admissible for (f, n), with (b^2 - 4n)/f^2.
#[derive(Clone, Debug)]
pub struct Admissible {
    pub f: u64,
    pub residues: Vec<(i64, i64)>,
}

impl Admissible {
    pub fn new(f: u64, n: i64) -> Self {
        let f2 = (f * f) as i64;
        let target = (4 * n as i128).rem_euclid(f2 as i128) as i64;
        let mut residues = Vec::new();
        for r in 0..f2 {
            if ((r as i128 * r as i128) % f2 as i128) as i64 != target {
                continue;
            }
            for t in 0..4 {
                let b = r + t * f2;
                let d = (b as i128 * b as i128 - 4 * n as i128) / f2 as i128;
                if matches!(d.rem_euclid(4), 0 | 1) {
                    residues.push((b, d as i64));
                }
            }
        }
        residues.sort_unstable();
        Admissible { f, residues }
    }

    pub fn count(&self) -> usize {
        self.residues.len()
    }

    /// Kl_{l,f}(0, n), walking a = b + 4f^2 j with the discriminant
    /// Q_b(j) = d_b + 8bj + 16f^2j^2 kept modulo 4l incrementally.
    pub fn kl0(&self, l: u64, table: &[i8]) -> i64 {
        debug_assert_eq!(table.len() as u64, 4 * l);
        let m = 4 * l as i64;
        let f2 = (self.f * self.f) as i64;
        let dd = (32 * f2 as i128).rem_euclid(m as i128) as i64;
        let mut total = 0i64;
        for &(b, d) in &self.residues {
            let mut q = d.rem_euclid(m);
            let mut step = ((8 * b as i128 + 16 * f2 as i128).rem_euclid(m as i128)) as i64;
            for _ in 0..l {
                total += table[q as usize] as i64;
                q += step;
                if q >= m {
                    q -= m;
                }
                step += dd;
                if step >= m {
                    step -= m;
                }
            }
        }
        total
    }

    /// The weight vector a -> ((a^2-4n)/f^2 / l) over a mod 4lf^2 (zero off
    /// the admissible set).
    pub fn weights(&self, l: u64) -> Vec<i8> {
        let q = 4 * l * self.f * self.f;
        let f2 = (self.f * self.f) as i128;
        let mut w = vec![0i8; q as usize];
        for &(b, d) in &self.residues {
            for j in 0..l as i128 {
                let e = d as i128 + 8 * b as i128 * j + 16 * f2 * j * j;
                w[(b as i128 + 4 * f2 * j) as usize] = kronecker(e.rem_euclid(4 * l as i128) as i64, l);
            }
        }
        w
    }
}

/// Kl by the residue-class order: admissible b mod 4f^2 first, then the l
/// lifts a = b + 4f^2 j. Independent of the enumeration in [`kl`].
pub fn kl_by_residue_classes(spec: KloostermanSpec) -> Result<Complex64> {
    spec.check_bound(DEFAULT_ENUMERATION_BOUND)?;
    let adm = Admissible::new(spec.f, spec.n);
    let q = spec.modulus();
    let f2 = (spec.f * spec.f) as i128;
    let mut s = Complex64::new(0.0, 0.0);
    for &(b, d) in &adm.residues {
        for j in 0..spec.l as i128 {
            let e = d as i128 + 8 * b as i128 * j + 16 * f2 * j * j;
            let chi = kronecker(e.rem_euclid(4 * spec.l as i128) as i64, spec.l);
            if chi != 0 {
                let a = b as i128 + 4 * f2 * j;
                s += unit(a * spec.xi as i128, q) * chi as f64;
            }
        }
    }
    Ok(s)
}

/// Kl_{l,f}(xi, n) for xi = 0..4lf^2-1 by one discrete Fourier transform of
/// the weight vector.
pub fn kl_all_frequencies(l: u64, f: u64, n: i64, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let adm = Admissible::new(f, n);
    kl_all_frequencies_from(&adm, l, planner)
}

pub fn kl_all_frequencies_from(adm: &Admissible, l: u64, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = adm.weights(l).into_iter().map(|w| Complex64::new(w as f64, 0.0)).collect();
    // the inverse transform carries e(+a xi / q)
    planner.plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// S(a, b; c) = sum over x mod c coprime to c of e((a x + b x^{-1}) / c).
pub fn classical_kloosterman(a: i64, b: i64, c: u64) -> Complex64 {
    assert!(c >= 1);
    let mut s = Complex64::new(0.0, 0.0);
    for x in 0..c {
        if let Some(inv) = mod_inverse(x, c) {
            let num = a as i128 * x as i128 + b as i128 * inv as i128;
            s += unit(num, c);
        }
    }
    s
}

pub fn mod_inverse(x: u64, c: u64) -> Option<u64> {
    if c == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (c as i128, x as i128 % c as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(c as i128) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerFactorQuery {
    pub p: u64,
    pub z: Complex64,
    pub n: i64,
    pub vp: u32,
}

impl EulerFactorQuery {
    pub fn new(p: u64, z: Complex64, n: i64) -> Result<Self> {
        if !crate::arith::is_prime(p) || n == 0 {
            return Err(Error::domain(format!("Euler factor needs a prime p and n != 0, got p={p}, n={n}")));
        }
        Ok(EulerFactorQuery { p, z, n, vp: valuation(p, n) })
    }
}

fn p_pow(p: u64, s: Complex64) -> Complex64 {
    (-s * (p as f64).ln()).exp()
}

/// sum_{j=0}^{k} p^{-j u} = (1 - p^{-u(k+1)})/(1 - p^{-u}), without the
/// removable singularity.
pub fn geometric_p(p: u64, u: Complex64, k: u32) -> Complex64 {
    let x = p_pow(p, u);
    let mut s = Complex64::new(0.0, 0.0);
    let mut t = Complex64::new(1.0, 0.0);
    for _ in 0..=k {
        s += t;
        t *= x;
    }
    s
}

/// The local factor D_p(z; n) in closed form. For p = 2 it carries the factor
/// 4 coming from the residues a mod 4.
pub fn euler_factor(q: EulerFactorQuery) -> Result<Complex64> {
    let z = q.z;
    let den = 1.0 - p_pow(q.p, 2.0 * z);
    if den.norm() < 1e-14 {
        return Err(Error::Pole { what: "euler_factor", at: format!("p={}, z={z}", q.p) });
    }
    let mut v = (1.0 - p_pow(q.p, z + 1.0)) / den;
    if q.vp > 0 {
        v *= geometric_p(q.p, z, q.vp);
    }
    if q.p == 2 {
        v *= 4.0;
    }
    Ok(v)
}

/// 4 zeta(2z)/zeta(z+1) prod_{p | n} (1 - p^{-z(v+1)})/(1 - p^{-z}).
pub fn euler_product(z: Complex64, n: i64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::domain("euler_product needs n != 0"));
    }
    if !(z.re > 0.5) {
        return Err(Error::domain(format!("euler_product needs Re z > 1/2, got {z}")));
    }
    let mut v = 4.0 * zeta(2.0 * z)? / zeta(z + 1.0)?;
    for (p, e) in factorize(n.unsigned_abs()) {
        v *= geometric_p(p, z, e);
    }
    Ok(v)
}

/// Truncated local series sum over a + 2b <= max_exp of
/// Kl_{p^a,p^b}(0,n) p^{-a(z+1) - b(2z+1)}, divided by 4 for odd p so that it
/// matches [`euler_factor`]. The error is a rigorous tail bound from
/// |Kl_{p^a,p^b}(0,n)| <= 4 p^{a+2b}.
pub fn local_series(p: u64, z: Complex64, n: i64, max_exp: u32) -> Result<Estimate<Complex64>> {
    let sigma = z.re;
    if !(sigma > 1.0) {
        return Err(Error::domain("local_series needs Re z > 1"));
    }
    let norm = if p == 2 { 1.0 } else { 0.25 };
    let mut s = Complex64::new(0.0, 0.0);
    let mut bound_partial = 0.0;
    for b in 0..=max_exp / 2 {
        let f = p.pow(b);
        let adm = Admissible::new(f, n);
        for a in 0..=(max_exp - 2 * b) {
            let l = p.pow(a);
            let k = adm.kl0(l, &kronecker_table(l)) as f64;
            s += k * p_pow(p, a as f64 * (z + 1.0) + b as f64 * (2.0 * z + 1.0));
            bound_partial += 4.0 * (p as f64).powf(-(a as f64) * sigma - b as f64 * (2.0 * sigma - 1.0));
        }
    }
    let pf = p as f64;
    let bound_all = 4.0 / ((1.0 - pf.powf(-sigma)) * (1.0 - pf.powf(1.0 - 2.0 * sigma)));
    let tail = (bound_all - bound_partial).max(0.0) + 1e-15 * bound_all;
    Ok(Estimate::new(s * norm, tail * norm))
}

/// Kl_{l,f}(0, n) for all l <= l_max, f <= f_max.
#[derive(Clone, Debug)]
pub struct Kl0Grid {
    pub n: i64,
    /// values[f-1][l-1]
    pub values: Vec<Vec<i64>>,
    /// number of admissible residues mod 4f^2, per f
    pub counts: Vec<usize>,
}

impl Kl0Grid {
    pub fn new(n: i64, f_max: u64, l_max: u64) -> Self {
        let adms: Vec<Admissible> = (1..=f_max).map(|f| Admissible::new(f, n)).collect();
        let mut values = vec![vec![0i64; l_max as usize]; f_max as usize];
        for l in 1..=l_max {
            let table = kronecker_table(l);
            for (fi, adm) in adms.iter().enumerate() {
                values[fi][l as usize - 1] = adm.kl0(l, &table);
            }
        }
        Kl0Grid { n, values, counts: adms.iter().map(Admissible::count).collect() }
    }

    pub fn get(&self, l: u64, f: u64) -> i64 {
        self.values[f as usize - 1][l as usize - 1]
    }
}

/// Multiplicative majorant beta(l) of |Kl_{l,f}(0,n)| / N_f, where N_f
/// counts the admissible residues b mod 4f^2.
///
/// For each b the sum over j mod l of (Q_b(j) / l), Q_b(j) = d_b + 8bj +
/// 16f^2j^2, factors over p^v || l, and Q_b has discriminant 256n. At odd p
/// the factor is p^{v-1} times a character sum mod p:
///
/// * p not dividing 2nf: a Jacobsthal sum of modulus 1 for odd v, and
///   p - 1 - (n/p) nonzero values of Q_b for even v;
/// * p | f, p not dividing 2n: Q_b is linear mod p, so 0 for odd v and p - 1
///   for even v;
/// * p | n, p not dividing f: Q_b has a double root mod p, so p - 1;
/// * otherwise, and at p = 2: the trivial p^v.
///
/// Above `cutoff` the coarser good-prime bound (p^{v-1} for odd v, p^v for
/// even v) is used so the full series has a closed form.
#[derive(Clone, Debug)]
pub struct KlMajorant {
    n: i64,
    f: u64,
    cutoff: u64,
}

impl KlMajorant {
    pub fn new(n: i64, f: u64, cutoff: u64) -> Self {
        KlMajorant { n, f, cutoff }
    }

    fn local(&self, p: u64, v: u32) -> u64 {
        let divides_n = self.n.unsigned_abs() % p == 0;
        let divides_f = self.f % p == 0;
        let pv1 = p.pow(v - 1);
        if p == 2 || (divides_n && divides_f) {
            p.pow(v)
        } else if divides_f {
            if v % 2 == 1 { 0 } else { pv1 * (p - 1) }
        } else if divides_n {
            pv1 * (p - 1)
        } else if p > self.cutoff {
            if v % 2 == 1 { pv1 } else { p.pow(v) }
        } else if v % 2 == 1 {
            pv1
        } else {
            let eps = crate::arith::jacobi(self.n, p) as i64;
            pv1 * (p as i64 - 1 - eps) as u64
        }
    }

    pub fn beta(&self, l: u64) -> u64 {
        factorize(l).into_iter().map(|(p, v)| self.local(p, v)).product()
    }

    /// 1 + sum_{v >= 1} beta(p^v) p^{-vs} in closed form.
    fn local_series(&self, p: u64, s: f64) -> f64 {
        let pf = p as f64;
        let x = pf.powf(1.0 - s);
        let divides_n = self.n.unsigned_abs() % p == 0;
        let divides_f = self.f % p == 0;
        if p == 2 || (divides_n && divides_f) {
            1.0 / (1.0 - x)
        } else if divides_f {
            1.0 + (pf - 1.0) / pf * x * x / (1.0 - x * x)
        } else if divides_n {
            1.0 + (pf - 1.0) / pf * x / (1.0 - x)
        } else {
            let c = if p > self.cutoff { pf } else { pf - 1.0 - crate::arith::jacobi(self.n, p) as f64 };
            1.0 + (x + c * x * x) / (pf * (1.0 - x * x))
        }
    }

    /// sum over all l of beta(l) l^{-s}.
    pub fn series(&self, s: f64) -> Result<f64> {
        let zr = |x: f64| -> Result<f64> { Ok(zeta(Complex64::new(x, 0.0))?.re) };
        // every prime with the coarse good-prime factor, as a zeta quotient
        let mut v = zr(s)? * zr(2.0 * s - 2.0)? / zr(2.0 * s)?;
        let coarse = |p: f64| (1.0 + p.powf(-s)) / (1.0 - p.powf(2.0 - 2.0 * s));
        let mut special: Vec<u64> = crate::arith::primes_up_to(self.cutoff);
        for (p, _) in factorize(2 * self.n.unsigned_abs() * self.f) {
            if p > self.cutoff {
                special.push(p);
            }
        }
        for p in special {
            v *= self.local_series(p, s) / coarse(p as f64);
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DSeries {
    pub value: Complex64,
    /// Rigorous bound on |D(z;n) - value|.
    pub tail_bound: f64,
    pub f_max: u64,
    pub l_max: u64,
}

/// Default margin above Re z = 1 required by [`dseries_truncated`].
pub const DSERIES_MARGIN: f64 = 0.5;

/// Partial sum of D(z; n) over f <= f_max, l <= l_max with a rigorous tail
/// bound.
///
/// The tail splits into l > l_max for each f <= f_max, bounded by
/// N_f f^{-(2 sigma+1)} sum_{l > l_max} beta(l) l^{-(sigma+1)} with the Euler
/// product of the [`KlMajorant`] minus its partial sum, and f > f_max,
/// bounded with N_f <= 4f^2 and beta(l) <= l by
/// 4 zeta(sigma) f_max^{2-2 sigma} / (2 sigma - 2).
pub fn dseries_truncated(z: Complex64, n: i64, f_max: u64, l_max: u64) -> Result<DSeries> {
    let grid = Kl0Grid::new(n, f_max, l_max);
    dseries_from_grid(z, &grid)
}

pub fn dseries_from_grid(z: Complex64, grid: &Kl0Grid) -> Result<DSeries> {
    let sigma = z.re;
    if sigma < 1.0 + DSERIES_MARGIN {
        return Err(Error::domain(format!("dseries needs Re z >= {}, got {z}", 1.0 + DSERIES_MARGIN)));
    }
    let f_max = grid.values.len() as u64;
    let l_max = grid.values.first().map_or(0, |v| v.len()) as u64;
    let s = sigma + 1.0;
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail = 0.0;
    for f in 1..=f_max {
        let mut inner = Complex64::new(0.0, 0.0);
        let majorant = KlMajorant::new(grid.n, f, l_max.max(1000));
        let mut majorant_partial = 0.0;
        let nf = grid.counts[f as usize - 1] as f64;
        for l in 1..=l_max {
            let k = grid.get(l, f);
            let beta = majorant.beta(l);
            debug_assert!(k.unsigned_abs() as f64 <= nf * beta as f64, "majorant violated at l={l}, f={f}");
            inner += k as f64 * p_pow_int(l, z + 1.0);
            majorant_partial += beta as f64 * (l as f64).powf(-s);
        }
        value += inner * p_pow_int(f, 2.0 * z + 1.0);
        let full = majorant.series(s)?;
        tail += nf * (f as f64).powf(-(2.0 * sigma + 1.0)) * ((full - majorant_partial).max(0.0) + 1e-14 * full);
    }
    let zs = zeta(Complex64::new(sigma, 0.0))?.re;
    tail += 4.0 * zs * (f_max as f64).powf(2.0 - 2.0 * sigma) / (2.0 * sigma - 2.0);
    Ok(DSeries { value, tail_bound: tail, f_max, l_max })
}

fn p_pow_int(m: u64, s: Complex64) -> Complex64 {
    (-s * (m as f64).ln()).exp()
}
