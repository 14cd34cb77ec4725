//! Exact integer arithmetic: Kronecker symbols, discriminants, class numbers
//! and regulators of quadratic fields, and the trace sets on which the
//! elliptic discriminant becomes a square.

use std::collections::HashSet;

use serde::Serialize;

use crate::{Error, Result};

/// Sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn valuation(p: u64, n: i64) -> u32 {
    assert!(n != 0 && p >= 2);
    let mut n = n.unsigned_abs();
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn is_square(n: i64) -> bool {
    n >= 0 && {
        let r = isqrt(n as u64);
        r * r == n as u64
    }
}

fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Jacobi symbol (a/n) for odd n >= 1.
pub fn jacobi(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol (d/l) for l >= 1.
///
/// (d/2) is 0 for even d, +1 for d = ±1 mod 8 and -1 for d = ±3 mod 8;
/// the odd part of l goes through the Jacobi symbol.
pub fn kronecker(d: i64, l: u64) -> i8 {
    assert!(l >= 1, "kronecker: l must be positive");
    let twos = l.trailing_zeros();
    let odd = l >> twos;
    let mut t = 1i8;
    if twos > 0 {
        if d % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(d.rem_euclid(8), 3 | 5) {
            t = -1;
        }
    }
    t * jacobi(d, odd)
}

/// Table of (d/l) for d = 0..4l. The symbol has period dividing 4l in d.
pub fn kronecker_table(l: u64) -> Vec<i8> {
    (0..4 * l as i64).map(|d| kronecker(d, l)).collect()
}

pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// A nonzero discriminant `value = conductor^2 * fundamental`.
///
/// Square values have `fundamental == 1`, which is not a field discriminant
/// but keeps the decomposition total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Discriminant {
    pub value: i64,
    pub fundamental: i64,
    pub conductor: u64,
    pub iota: u8,
}

impl Discriminant {
    pub fn new(value: i64) -> Result<Self> {
        decompose(value)
    }

    pub fn is_square(&self) -> bool {
        self.fundamental == 1
    }
}

pub fn decompose(delta: i64) -> Result<Discriminant> {
    if delta == 0 || !matches!(delta.rem_euclid(4), 0 | 1) {
        return Err(Error::domain(format!("{delta} is not a nonzero discriminant")));
    }
    let mut s = 1u64;
    let mut core = delta.signum();
    for (p, e) in factorize(delta.unsigned_abs()) {
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            core *= p as i64;
        }
    }
    let (fundamental, conductor) = if core.rem_euclid(4) == 1 {
        (core, s)
    } else {
        // delta = 0 mod 4 forces s even here
        (4 * core, s / 2)
    };
    Ok(Discriminant {
        value: delta,
        fundamental,
        conductor,
        iota: (delta < 0) as u8,
    })
}

/// All f >= 1 with f^2 | delta and delta / f^2 = 0 or 1 mod 4, ascending.
pub fn divisors_with_square_cofactor(delta: i64) -> Vec<u64> {
    assert!(delta != 0);
    let a = delta.unsigned_abs();
    (1..=isqrt(a))
        .filter(|&f| a % (f * f) == 0 && matches!((delta / (f * f) as i64).rem_euclid(4), 0 | 1))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticFieldData {
    pub discriminant: i64,
    pub class_number: u64,
    /// Natural-log regulator, real fields only.
    pub regulator: Option<f64>,
    /// Number of roots of unity, imaginary fields only.
    pub root_count: Option<u32>,
}

pub const DEFAULT_IMAGINARY_BOUND: u64 = 1_000_000;
pub const DEFAULT_REAL_BOUND: u64 = 10_000;

pub fn class_data(d: i64) -> Result<QuadraticFieldData> {
    class_data_bounded(d, DEFAULT_IMAGINARY_BOUND, DEFAULT_REAL_BOUND)
}

/// Where class numbers and regulators come from; lets callers put a cache in
/// front of [`class_data`].
pub trait ClassSource {
    fn class_data(&self, d: i64) -> Result<QuadraticFieldData>;
}

/// Computes from scratch on every call.
#[derive(Clone, Copy, Debug, Default)]
pub struct Computed;

impl ClassSource for Computed {
    fn class_data(&self, d: i64) -> Result<QuadraticFieldData> {
        class_data(d)
    }
}

pub fn class_data_bounded(d: i64, imaginary_bound: u64, real_bound: u64) -> Result<QuadraticFieldData> {
    if !is_fundamental(d) {
        return Err(Error::domain(format!("{d} is not a fundamental discriminant")));
    }
    let bound = if d < 0 { imaginary_bound } else { real_bound };
    if d.unsigned_abs() > bound {
        return Err(Error::Bound { what: "class_data", value: d.unsigned_abs() as u128, bound: bound as u128 });
    }
    if d < 0 {
        let w = match d {
            -3 => 6,
            -4 => 4,
            _ => 2,
        };
        Ok(QuadraticFieldData {
            discriminant: d,
            class_number: count_reduced_definite(d),
            regulator: None,
            root_count: Some(w),
        })
    } else {
        let (regulator, norm_minus_one) = real_regulator(d);
        let narrow = count_indefinite_cycles(d);
        let h = if norm_minus_one { narrow } else { narrow / 2 };
        Ok(QuadraticFieldData { discriminant: d, class_number: h, regulator: Some(regulator), root_count: None })
    }
}

/// Reduced positive definite forms (a,b,c): |b| <= a <= c, with b >= 0 when
/// |b| = a or a = c.
pub fn reduced_definite_forms(d: i64) -> Vec<(i64, i64, i64)> {
    assert!(d < 0);
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= -d {
        for b in -a + 1..=a {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            if gcd(gcd(a as u64, b.unsigned_abs()), c as u64) == 1 {
                out.push((a, b, c));
            }
        }
        a += 1;
    }
    out
}

fn count_reduced_definite(d: i64) -> u64 {
    reduced_definite_forms(d).len() as u64
}

/// Narrow class number: the number of rho-cycles of reduced indefinite forms.
fn count_indefinite_cycles(d: i64) -> u64 {
    let sd = (d as f64).sqrt();
    let reduced = |a: i64, b: i64| b > 0 && (b as f64) < sd && (sd - b as f64) < (2 * a.abs()) as f64 && ((2 * a.abs()) as f64) < sd + b as f64;
    let mut forms = Vec::new();
    let mut b = 1i64;
    while b * b < d {
        if (b - d).rem_euclid(2) == 0 {
            let m = (d - b * b) / 4;
            for a in 1..=m {
                if m % a == 0 && reduced(a, b) {
                    forms.push((a, b));
                    forms.push((-a, b));
                }
            }
        }
        b += 1;
    }
    let rho = |(a, b): (i64, i64)| -> (i64, i64) {
        let c = (b * b - d) / (4 * a);
        let m = 2 * c.abs();
        // b' = -b mod 2|c| in (sqrt(d) - 2|c|, sqrt(d))
        let mut bp = (-b).rem_euclid(m);
        while (bp as f64) < sd - m as f64 {
            bp += m;
        }
        while (bp as f64) > sd {
            bp -= m;
        }
        (c, bp)
    };
    let mut seen: HashSet<(i64, i64)> = HashSet::new();
    let mut cycles = 0;
    for &f in &forms {
        if seen.contains(&f) {
            continue;
        }
        cycles += 1;
        let mut g = f;
        while seen.insert(g) {
            g = rho(g);
            debug_assert!(reduced(g.0, g.1), "rho left the reduced set at {g:?}");
        }
    }
    cycles
}

/// Regulator of the maximal order of discriminant d > 0 from one period of
/// the continued fraction of its standard generator. Also reports whether the
/// fundamental unit has norm -1 (odd period).
fn real_regulator(d: i64) -> (f64, bool) {
    let (mut p, mut q, rad) = if d % 4 == 1 { (1i64, 2i64, d) } else { (0, 1, d / 4) };
    let s = isqrt(rad as u64) as i64;
    let sq = (rad as f64).sqrt();
    let step = |p: i64, q: i64| -> (i64, i64) {
        let a = (p + s).div_euclid(q);
        let pn = a * q - p;
        (pn, (rad - pn * pn) / q)
    };
    (p, q) = step(p, q);
    let start = (p, q);
    let mut reg = 0.0;
    let mut len = 0;
    loop {
        reg += ((p as f64 + sq) / q as f64).ln();
        len += 1;
        (p, q) = step(p, q);
        if (p, q) == start {
            break;
        }
    }
    (reg, len % 2 == 1)
}

/// Sign of the determinant in the elliptic sum: `Plus` pairs with det = +p^k
/// and discriminant m^2 - 4p^k, `Minus` with det = -p^k and m^2 + 4p^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    /// The determinant n for which the discriminant reads m^2 - 4n.
    pub fn det(self, pk: u64) -> i64 {
        match self {
            Sign::Plus => pk as i64,
            Sign::Minus => -(pk as i64),
        }
    }

    /// x^2 - 1 or x^2 + 1: the discriminant m^2 - 4n divided by 4|n| at
    /// x = m / (2 sqrt|n|).
    pub fn quad(self, x: f64) -> f64 {
        match self {
            Sign::Plus => x * x - 1.0,
            Sign::Minus => x * x + 1.0,
        }
    }
}

/// A trace m with m^2 - 4n = root^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SquareTrace {
    pub m: i64,
    pub root: u64,
}

impl SquareTrace {
    /// m^2 - 4n = 0; the weighted L-value diverges there.
    pub fn is_zero_discriminant(&self) -> bool {
        self.root == 0
    }
}

/// All m with m^2 - 4n a perfect square, from the factorizations
/// (m - c)(m + c) = 4n. Sorted by m.
pub fn enumerate_square_traces(n: i64) -> Vec<SquareTrace> {
    assert!(n != 0);
    let big = 4 * n.unsigned_abs();
    let mut set = std::collections::BTreeSet::new();
    let mut d = 1u64;
    while d * d <= big {
        if big % d == 0 {
            let e = big / d;
            if (d + e) % 2 == 0 {
                let (m, c) = if n > 0 { ((d + e) / 2, (e - d) / 2) } else { ((e - d) / 2, (d + e) / 2) };
                set.insert((m as i64, c));
                set.insert((-(m as i64), c));
            }
        }
        d += 1;
    }
    set.into_iter().map(|(m, root)| SquareTrace { m, root }).collect()
}
