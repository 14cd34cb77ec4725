//! The verification suites behind `elltrace verify <suite>`.
//!
//! Each suite produces a list of reports in a fixed order. Sampled suites
//! draw from a ChaCha stream seeded by the run seed, so a rerun with the same
//! configuration reproduces every report except its wall time.

use std::time::Instant;

use elltrace::arith::{is_fundamental, is_square, Discriminant};
use elltrace::charsum::{dseries_from_grid, euler_factor, euler_product, local_series, EulerFactorQuery, Kl0Grid};
use elltrace::elliptic::{
    direct_elliptic, main_identity_check, poisson_rhs, sigma_square, smoothing_check, xi0_contour, xi0_series, Bump, EllipticInstance, SmoothingKernel, ThetaPair,
};
use elltrace::lfun::{afe_l1, completed_lambda, weighted_l, LMethod, LValueRequest, TruncationBudget};
use elltrace::specfun::{cutoff_f, cutoff_f_complement, dual_kernel_h, k0_at_2, mellin_f, mellin_f_direct, ContourSpec, H_DECAY_CONSTANT};
use elltrace::VerificationReport;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ClassCache, CliError, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Euler,
    Afe,
    FunctionalEq,
    Poisson,
    Xi0,
    Main,
    Kernels,
}

pub const EULER_PRIMES: [u64; 5] = [2, 3, 5, 7, 11];
pub const EULER_N: [i64; 16] = [1, -1, 2, -2, 3, -3, 4, -4, 6, -6, 8, -8, 9, -9, 12, -12];
pub const DSERIES_CUTOFF: u64 = 500;
pub const L_VALUE_TOL: f64 = 1e-6;
pub const L_VALUE_BOUND: i64 = 10_000;
pub const POISSON_TOL: f64 = 1e-3;
pub const XI0_TOL: f64 = 1e-6;
pub const FE_SAMPLES: usize = 20;

fn euler_points() -> [Complex64; 3] {
    [Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(2.0, 1.0)]
}

/// Largest exponent with p^e <= 10^5, so the local Kloosterman sums stay small.
pub fn local_exponent(p: u64) -> u32 {
    let mut e = 0;
    while p.pow(e + 1) <= 100_000 {
        e += 1;
    }
    e
}

/// A second test function, asymmetric and with a modulated g_2^+.
pub fn second_theta() -> ThetaPair {
    ThetaPair::new(
        vec![Bump::new(0.3, 1.5, 0.7)],
        vec![Bump::new(-0.2, 1.8, 1.3).modulated(vec![1.0, 0.5])],
        vec![Bump::new(0.4, 1.2, 0.8)],
    )
    .expect("valid bumps")
}

/// A named instance of the elliptic identities.
#[derive(Clone, Debug)]
pub struct Case {
    pub label: String,
    pub inst: EllipticInstance,
}

impl Case {
    pub fn new(p: u64, k: u32, theta_name: &str, theta: ThetaPair, alpha: f64, base: &TruncationBudget) -> Result<Case, CliError> {
        let inst = EllipticInstance::new(p, k, theta, TruncationBudget { alpha, ..*base })?;
        Ok(Case { label: format!("p={p} k={k} theta={theta_name} alpha={alpha}"), inst })
    }

    fn from_config(cfg: &RunConfig) -> Result<Case, CliError> {
        let inst = cfg.instance()?;
        let label = format!("p={} k={} theta=bump({},{}) alpha={}", inst.p, inst.k, cfg.theta_center, cfg.theta_radius, inst.budget.alpha);
        Ok(Case { label, inst })
    }
}

/// p^k in {2, 3, 5}, both test functions, alpha in {0.4, 0.6}.
pub fn poisson_cases(base: &TruncationBudget) -> Result<Vec<Case>, CliError> {
    let mut out = Vec::new();
    for p in [2u64, 3, 5] {
        for (name, theta) in [("standard", ThetaPair::default()), ("second", second_theta())] {
            for alpha in [0.4, 0.6] {
                out.push(Case::new(p, 1, name, theta.clone(), alpha, base)?);
            }
        }
    }
    Ok(out)
}

/// The Poisson cases plus p = 3, k = 2.
pub fn xi0_cases(base: &TruncationBudget) -> Result<Vec<Case>, CliError> {
    let mut out = poisson_cases(base)?;
    out.push(Case::new(3, 2, "standard", ThetaPair::default(), 0.5, base)?);
    Ok(out)
}

pub fn main_cases(base: &TruncationBudget) -> Result<Vec<Case>, CliError> {
    [2u64, 3, 5].into_iter().map(|p| Case::new(p, 1, "standard", ThetaPair::default(), 0.5, base)).collect()
}

/// Collects reports, timing each check and turning errors into failed
/// reports.
pub struct Runner<'a> {
    fail_fast: bool,
    sink: &'a mut dyn FnMut(&VerificationReport),
    pub reports: Vec<VerificationReport>,
    /// Checks that ended in a numerical failure rather than a discrepancy.
    pub numeric_errors: usize,
    stopped: bool,
}

impl<'a> Runner<'a> {
    pub fn new(fail_fast: bool, sink: &'a mut dyn FnMut(&VerificationReport)) -> Self {
        Runner { fail_fast, sink, reports: Vec::new(), numeric_errors: 0, stopped: false }
    }

    pub fn check(&mut self, quantity: &str, f: impl FnOnce() -> Result<VerificationReport, CliError>) {
        self.check_many(quantity, || f().map(|r| vec![r]));
    }

    pub fn check_many(&mut self, quantity: &str, f: impl FnOnce() -> Result<Vec<VerificationReport>, CliError>) {
        if self.stopped {
            return;
        }
        let start = Instant::now();
        let reports = match f() {
            Ok(rs) => rs,
            Err(e) => {
                if e.exit_code() == crate::EXIT_NUMERIC {
                    self.numeric_errors += 1;
                }
                vec![VerificationReport::new(quantity, f64::NAN, None, f64::NAN, 0.0).with_warnings([format!("error: {e}")])]
            }
        };
        let per = start.elapsed().as_secs_f64() / reports.len().max(1) as f64;
        for mut r in reports {
            r.wall_time_s = per;
            (self.sink)(&r);
            let failed = !r.passed();
            self.reports.push(r);
            if failed && self.fail_fast {
                self.stopped = true;
                return;
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(VerificationReport::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.numeric_errors > 0 {
            crate::EXIT_NUMERIC
        } else if self.all_passed() {
            crate::EXIT_PASS
        } else {
            crate::EXIT_CHECK_FAILED
        }
    }
}

pub fn run(suite: Suite, cfg: &RunConfig, cache: &ClassCache, runner: &mut Runner) -> Result<(), CliError> {
    let budget = cfg.budget()?;
    match suite {
        Suite::Euler => euler(runner),
        Suite::Afe => afe(cache, runner),
        Suite::FunctionalEq => functional_eq(cfg.seed, runner),
        Suite::Kernels => kernels(cfg.seed, runner),
        Suite::Poisson => {
            let cases = if cfg.p.is_some() { vec![Case::from_config(cfg)?] } else { poisson_cases(&budget)? };
            cases.iter().for_each(|c| runner.check(&format!("poisson {}", c.label), || poisson_check(c)));
        }
        Suite::Xi0 => {
            let cases = if cfg.p.is_some() { vec![Case::from_config(cfg)?] } else { xi0_cases(&budget)? };
            cases.iter().for_each(|c| runner.check(&format!("xi0 {}", c.label), || xi0_check(c)));
        }
        Suite::Main => {
            let cases = if cfg.p.is_some() { vec![Case::from_config(cfg)?] } else { main_cases(&budget)? };
            cases.iter().for_each(|c| runner.check(&format!("main {}", c.label), || main_check(c)));
        }
    }
    Ok(())
}

/// Local series against the closed Euler factors at each p, and the
/// truncated D(z; n) against the Euler product with its certified tail.
pub fn euler(runner: &mut Runner) {
    for n in EULER_N {
        for z in euler_points() {
            for p in EULER_PRIMES {
                runner.check(&format!("euler-factor p={p} n={n} z={z}"), || {
                    let series = local_series(p, z, n, local_exponent(p))?;
                    let factor = euler_factor(EulerFactorQuery::new(p, z, n)?)?;
                    let scale = factor.norm().max(1.0);
                    Ok(VerificationReport::complex(format!("euler-factor p={p} n={n} z={z}"), series.value, Some(factor), series.error, series.error / scale))
                });
            }
        }
        let q = format!("dseries n={n}");
        runner.check_many(&q, || {
            let grid = Kl0Grid::new(n, DSERIES_CUTOFF, DSERIES_CUTOFF);
            let mut out = Vec::new();
            for z in euler_points() {
                let d = dseries_from_grid(z, &grid)?;
                let e = euler_product(z, n)?;
                let scale = e.norm().max(1.0);
                out.push(
                    VerificationReport::complex(format!("dseries n={n} z={z} vs euler product"), d.value, Some(e), d.tail_bound, d.tail_bound / scale)
                        .with_detail("f_max", d.f_max as f64)
                        .with_detail("l_max", d.l_max as f64),
                );
                out.push(VerificationReport::new(format!("dseries n={n} z={z} relative tail bound"), d.tail_bound / e.norm(), Some(0.0), 0.0, 1e-4));
            }
            Ok(out)
        });
    }
}

/// L(1, chi_D) for every fundamental |D| <= 10^4 by the class number
/// formula, the AFE and the finite character sum, pairwise.
pub fn afe(cache: &ClassCache, runner: &mut Runner) {
    let budget = TruncationBudget::default();
    for d in (-L_VALUE_BOUND..=L_VALUE_BOUND).filter(|&d| is_fundamental(d)) {
        runner.check_many(&format!("L(1) D={d}"), || {
            let disc = Discriminant::new(d)?;
            let one = Complex64::new(1.0, 0.0);
            let cn = LValueRequest::new(one, disc, LMethod::ClassNumberFormula, budget)?.evaluate_with(cache)?;
            let af = weighted_l(one, &disc, LMethod::Afe, &budget)?;
            let cs = weighted_l(one, &disc, LMethod::FiniteCharacterSum, &budget)?;
            let pair = |a: &str, x: &elltrace::Estimate<Complex64>, b: &str, y: &elltrace::Estimate<Complex64>| {
                VerificationReport::new(format!("L(1) D={d} {a} vs {b}"), x.value.re, Some(y.value.re), x.error + y.error, L_VALUE_TOL).strictly_relative()
            };
            Ok(vec![pair("afe", &af, "class-number", &cn), pair("character-sum", &cs, "class-number", &cn), pair("afe", &af, "character-sum", &cs)])
        });
    }
    // the split point drops out of the AFE
    for delta in [-7i64, 13, -20, 60, -135, 221, -1003, 4001] {
        runner.check(&format!("afe split independence delta={delta}"), || {
            let disc = Discriminant::new(delta)?;
            let q = delta.unsigned_abs() as f64;
            let lo = afe_l1(&disc, &TruncationBudget { a: Some(q.powf(0.3)), ..budget })?;
            let hi = afe_l1(&disc, &TruncationBudget { a: Some(q.powf(0.7)), ..budget })?;
            Ok(VerificationReport::new(format!("afe split independence delta={delta}"), lo.value, Some(hi.value), lo.error + hi.error, 1e-8))
        });
    }
}

/// Discriminants with 3 <= |delta| <= 400, not squares, split by whether
/// they are fundamental.
fn discriminant_pools() -> (Vec<i64>, Vec<i64>) {
    let all: Vec<i64> = (-400i64..=400).filter(|d| d.abs() >= 3 && matches!(d.rem_euclid(4), 0 | 1) && !is_square(*d)).collect();
    all.iter().partition(|d| is_fundamental(**d))
}

pub fn fe_samples(seed: u64) -> Vec<(Complex64, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fundamental, other) = discriminant_pools();
    let mut out = Vec::with_capacity(FE_SAMPLES);
    while out.len() < FE_SAMPLES {
        let z = Complex64::new(rng.gen_range(-0.5..1.5), rng.gen_range(-4.0..4.0));
        // Gamma((z + iota)/2) has a pole at z = 0; keep away from 0 and 1
        if z.norm() < 0.25 || (1.0 - z).norm() < 0.25 {
            continue;
        }
        let pool = if out.len() % 2 == 0 { &fundamental } else { &other };
        out.push((z, pool[rng.gen_range(0..pool.len())]));
    }
    out
}

/// Lambda(z, delta) = Lambda(1 - z, delta) at seeded samples, half of them
/// at non-fundamental delta.
pub fn functional_eq(seed: u64, runner: &mut Runner) {
    let budget = TruncationBudget::default();
    for (z, delta) in fe_samples(seed) {
        let q = format!("functional equation delta={delta} z={z:.6}");
        runner.check(&q, || {
            let disc = Discriminant::new(delta)?;
            let l = completed_lambda(z, &disc, LMethod::FiniteCharacterSum, &budget)?;
            let r = completed_lambda(1.0 - z, &disc, LMethod::FiniteCharacterSum, &budget)?;
            Ok(VerificationReport::complex(q.clone(), l.value, Some(r.value), l.error + r.error, L_VALUE_TOL)
                .strictly_relative()
                .with_detail("conductor", disc.conductor as f64))
        });
    }
}

/// Count of grid points violating a bound, as a report that passes at 0.
fn violations(quantity: &str, bad: usize, worst: f64) -> VerificationReport {
    VerificationReport::new(quantity, bad as f64, Some(0.0), 0.0, 0.0).with_detail("worst_ratio", worst)
}

/// Envelopes of F and H, the Mellin transform against its defining
/// integral, oddness of F~, and the smoothing of theta by both kernels.
pub fn kernels(seed: u64, runner: &mut Runner) {
    let c = 1.0 / (2.0 * k0_at_2());
    runner.check_many("cutoff F envelopes", || {
        let grid: Vec<f64> = (1..=1000).map(|i| 20.0 * i as f64 / 1001.0).collect();
        let mut upper = (0, 0.0f64);
        let mut lower = (0, 0.0f64);
        let mut mono = 0;
        let (mut prev_f, mut prev_c) = (1.0, 0.0);
        for &x in &grid {
            let f = cutoff_f(x)?.value;
            let comp = cutoff_f_complement(x)?.value;
            let ru = f / (c * (-x).exp());
            let rl = comp / (c * (-1.0 / x).exp());
            upper = (upper.0 + usize::from(!(ru < 1.0)), upper.1.max(ru));
            lower = (lower.0 + usize::from(!(rl < 1.0 && comp > 0.0)), lower.1.max(rl));
            // F rounds to 1 near 0, so read monotonicity from 1 - F there
            let ok = if x < 1.0 { comp > prev_c } else { f < prev_f };
            mono += usize::from(!ok);
            (prev_f, prev_c) = (f, comp);
        }
        Ok(vec![
            violations("F(x) < e^-x / 2K0(2) violations on 1000 points", upper.0, upper.1),
            violations("1 - F(x) < e^-1/x / 2K0(2) violations on 1000 points", lower.0, lower.1),
            violations("F strictly decreasing violations on 1000 points", mono, 0.0),
        ])
    });
    runner.check("mellin_f vs mellin_f_direct on the strip grid", || {
        let mut worst = 0.0f64;
        let mut err = 0.0f64;
        for re in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0] {
            for j in -4..=4 {
                let z = Complex64::new(re, 2.5 * j as f64);
                let d = mellin_f_direct(z)?;
                worst = worst.max((mellin_f(z)? - d.value).norm());
                err = err.max(d.error);
            }
        }
        Ok(VerificationReport::new("max |mellin_f - mellin_f_direct| on 72 strip points", worst, Some(0.0), err, 1e-8))
    });
    runner.check("mellin oddness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d656c6c);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let z = Complex64::new(rng.gen_range(0.1..3.0), rng.gen_range(-10.0..10.0));
            let a = mellin_f(z)?;
            worst = worst.max((a + mellin_f(-z)?).norm() / a.norm().max(1.0));
        }
        Ok(VerificationReport::new("max |F~(z) + F~(-z)| at 50 samples", worst, Some(0.0), 0.0, 1e-10))
    });
    runner.check("H decay envelope", || {
        let spec = ContourSpec::line(1.0);
        let mut bad = 0;
        let mut worst = 0.0f64;
        for y in [1.0f64, 4.0, 9.0, 16.0, 25.0] {
            for iota in [0u8, 1] {
                let h = dual_kernel_h(iota, y, &spec)?;
                let ratio = (h.value.abs() + h.error) / (H_DECAY_CONSTANT * (-2.0 * y.sqrt()).exp() / y);
                bad += usize::from(!(ratio <= 1.0));
                worst = worst.max(ratio);
            }
        }
        Ok(violations("|H(y)| <= C e^(-2 sqrt y) / y violations at y = 1, 4, 9, 16, 25", bad, worst))
    });
    smoothing(runner);
}

/// Derivative sequences of the smoothed theta at x = +-1 for F and H, and the
/// raw theta as a control that must not pass.
pub fn smoothing(runner: &mut Runner) {
    let theta = ThetaPair::default();
    for alpha in [0.4, 0.5, 0.6] {
        for kernel in [SmoothingKernel::F, SmoothingKernel::H] {
            let q = format!("smoothing {kernel:?} alpha={alpha}");
            runner.check(&q, || {
                let rep = smoothing_check(&theta, alpha, kernel)?;
                let bad = rep.rows.iter().filter(|r| !r.vanishing()).count();
                let mut r = VerificationReport::new(format!("{q}: non-vanishing derivative sequences"), bad as f64, Some(0.0), 0.0, 0.0);
                for row in &rep.rows {
                    r = r.with_detail(format!("x={} order={} h=1e-4", row.point, row.order), row.values[row.values.len() - 1]);
                }
                Ok(r)
            });
        }
    }
    runner.check("smoothing raw control", || {
        let rep = smoothing_check(&theta, 0.5, SmoothingKernel::Raw)?;
        let bad = rep.rows.iter().filter(|r| !r.vanishing()).count();
        let detected = if rep.smooth() { 0.0 } else { 1.0 };
        Ok(VerificationReport::new("smoothing raw control detected as non-smooth", detected, Some(1.0), 0.0, 0.0).with_detail("non_vanishing_rows", bad as f64))
    });
}

pub fn poisson_check(case: &Case) -> Result<VerificationReport, CliError> {
    let direct = direct_elliptic(&case.inst)?;
    let sq = sigma_square(&case.inst)?;
    let side = poisson_rhs(&case.inst)?;
    let lhs = direct.value + sq.value;
    let mut warnings = direct.warnings;
    warnings.extend(sq.warnings);
    warnings.extend(side.warnings.iter().cloned());
    Ok(VerificationReport::new(format!("poisson {}", case.label), side.value, Some(lhs), side.error + direct.error + sq.error, POISSON_TOL)
        .strictly_relative()
        .with_budget(case.inst.budget)
        .with_detail("direct", direct.value)
        .with_detail("sigma_square", sq.value)
        .with_detail("xi0", side.xi0)
        .with_detail("xi_nonzero", side.xi_nonzero)
        .with_detail("pair_tail", side.pair_tail)
        .with_detail("pairs", side.pairs.len() as f64)
        .with_warnings(warnings))
}

pub fn xi0_check(case: &Case) -> Result<VerificationReport, CliError> {
    let series = xi0_series(&case.inst)?;
    let closed = xi0_contour(&case.inst)?;
    Ok(VerificationReport::new(format!("xi0 {}", case.label), series.value, Some(closed.value), series.error + closed.error, XI0_TOL)
        .strictly_relative()
        .with_budget(case.inst.budget)
        .with_detail("trivial", closed.trivial.value)
        .with_detail("residue", closed.residue.value)
        .with_detail("line_term", closed.line_term.value)
        .with_detail("indented_term", closed.indented_term.value)
        .with_warnings(series.warnings))
}

pub fn main_check(case: &Case) -> Result<VerificationReport, CliError> {
    let mut r = main_identity_check(&case.inst)?;
    r.quantity = format!("main {}", case.label);
    Ok(r)
}
