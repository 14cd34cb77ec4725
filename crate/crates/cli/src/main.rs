use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use elltrace::arith::Discriminant;
use elltrace::charsum::{dseries_truncated, euler_factor, euler_product, kl, kl_by_residue_classes, local_series, EulerFactorQuery, KloostermanSpec};
use elltrace::elliptic::{eisenstein_residue_value, trivial_rep_value};
use elltrace::lfun::{afe, completed_lambda, LMethod, LValueRequest, TruncationBudget};
use elltrace::specfun::{cutoff_f, dual_kernel_h, mellin_f, ContourSpec};
use elltrace::VerificationReport;
use elltrace_cli::output::{human_line, json_line, write_lattice_csv};
use elltrace_cli::suites::{self, Case, Runner, Suite};
use elltrace_cli::{ClassCache, CliError, RunConfig, EXIT_USAGE};
use num_complex::Complex64;

#[derive(Parser)]
#[command(name = "elltrace", version, about = "Explicit elliptic terms of the GL(2) trace formula: values and identity checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Config file (key = value with [sections]); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true)]
    k: Option<u32>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    upsilon: Option<f64>,
    /// Absolute target for discarded tails.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Poisson frequencies kept: |xi| <= xi_max * 4lf^2.
    #[arg(long, global = true)]
    xi_max: Option<f64>,
    #[arg(long, global = true)]
    l_max: Option<u64>,
    #[arg(long, global = true)]
    f_max: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta_center: Option<f64>,
    #[arg(long, global = true)]
    theta_radius: Option<f64>,
    /// Emit JSON lines on stdout; the human summary goes to stderr.
    #[arg(long, global = true)]
    json: bool,
    /// Write the Poisson term lattice to this CSV file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    fail_fast: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Twisted Kloosterman sum Kl_{l,f}(xi, n).
    Kl {
        #[arg(long)]
        l: u64,
        #[arg(long)]
        f: u64,
        #[arg(long, allow_hyphen_values = true)]
        xi: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        /// Recompute by enumerating residue classes in a second order.
        #[arg(long)]
        oracle: bool,
    },
    /// Truncated D(z; n) against its Euler product.
    Dseries {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value = "2")]
        z: String,
    },
    /// Euler factor at p against the truncated local series.
    Euler {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value = "2")]
        z: String,
    },
    /// Weighted L-value L(z, delta).
    Lvalue {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long, default_value = "1")]
        z: String,
        #[arg(long, value_enum, default_value = "class-number-formula")]
        method: Method,
    },
    /// L(z, delta) by the approximate functional equation, against the
    /// Hurwitz-zeta form.
    Afe {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long, default_value = "1")]
        z: String,
        /// Split point A; default |delta|^{1/2}.
        #[arg(long)]
        a: Option<f64>,
    },
    /// Completed Lambda(z, delta) against Lambda(1 - z, delta).
    Lambda {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long)]
        z: String,
    },
    /// Poisson-summed elliptic part against direct + square terms.
    Poisson,
    /// Zero-frequency term: series against closed form.
    Xi0,
    /// The end-to-end identity.
    Main,
    /// F(x), F~(z) and H_iota(y) values.
    Kernels {
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        z: Option<String>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Method {
    TruncatedSeries,
    Afe,
    ClassNumberFormula,
    FiniteCharacterSum,
}

impl From<Method> for LMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::TruncatedSeries => LMethod::TruncatedSeries,
            Method::Afe => LMethod::Afe,
            Method::ClassNumberFormula => LMethod::ClassNumberFormula,
            Method::FiniteCharacterSum => LMethod::FiniteCharacterSum,
        }
    }
}

/// "2", "2+1i", "0.5-3i", "i".
fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Usage(format!("cannot parse complex number {s:?}"));
    let t = s.trim().replace(' ', "");
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let split = body.char_indices().skip(1).filter(|&(i, c)| (c == '+' || c == '-') && !body[..i].ends_with(['e', 'E'])).map(|(i, _)| i).last();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

fn resolve_config(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
    }
    macro_rules! over {
        ($($field:ident),*) => { $( if let Some(v) = c.$field.clone() { cfg.$field = v; } )* };
    }
    over!(k, alpha, upsilon, tol, xi_max, l_max, f_max, theta_center, theta_radius, seed);
    if c.p.is_some() {
        cfg.p = c.p;
    }
    if c.cache_dir.is_some() {
        cfg.cache_dir = c.cache_dir.clone();
    }
    cfg.fail_fast |= c.fail_fast;
    Ok(cfg)
}

fn require_p(cfg: &RunConfig) -> Result<u64, CliError> {
    cfg.p.ok_or_else(|| CliError::Usage("--p is required".into()))
}

fn single(cfg: &RunConfig, cache: &ClassCache, command: Command, csv: Option<&PathBuf>) -> Result<Vec<VerificationReport>, CliError> {
    let budget = cfg.budget()?;
    let reports = match command {
        Command::Kl { l, f, xi, n, oracle } => {
            let spec = KloostermanSpec::new(l, f, xi, n)?;
            let v = kl(spec)?;
            let o = if oracle { Some(kl_by_residue_classes(spec)?) } else { None };
            vec![VerificationReport::complex(format!("kl l={l} f={f} xi={xi} n={n}"), v, o, 1e-12 * spec.modulus() as f64, 1e-9)]
        }
        Command::Dseries { n, z } => {
            let z = parse_complex(&z)?;
            let d = dseries_truncated(z, n, cfg.f_max.min(suites::DSERIES_CUTOFF), cfg.l_max.min(suites::DSERIES_CUTOFF))?;
            let e = euler_product(z, n)?;
            vec![VerificationReport::complex(format!("dseries n={n} z={z}"), d.value, Some(e), d.tail_bound, d.tail_bound / e.norm().max(1.0))
                .with_detail("f_max", d.f_max as f64)
                .with_detail("l_max", d.l_max as f64)]
        }
        Command::Euler { n, z } => {
            let p = require_p(cfg)?;
            let z = parse_complex(&z)?;
            let e = euler_factor(EulerFactorQuery::new(p, z, n)?)?;
            let s = local_series(p, z, n, suites::local_exponent(p))?;
            vec![VerificationReport::complex(format!("euler-factor p={p} n={n} z={z}"), e, Some(s.value), s.error, s.error / s.value.norm().max(1.0))]
        }
        Command::Lvalue { delta, z, method } => {
            let z = parse_complex(&z)?;
            let m: LMethod = method.into();
            let v = LValueRequest::new(z, Discriminant::new(delta)?, m, budget)?.evaluate_with(cache)?;
            vec![VerificationReport::complex(format!("L(z, delta) delta={delta} z={z} method={}", m.name()), v.value, None, v.error, 0.0)]
        }
        Command::Afe { delta, z, a } => {
            let z = parse_complex(&z)?;
            let disc = Discriminant::new(delta)?;
            let b = TruncationBudget { a, ..budget };
            let v = afe(z, &disc, &b)?;
            let o = LValueRequest::new(z, disc, LMethod::FiniteCharacterSum, b)?.evaluate()?;
            vec![VerificationReport::complex(format!("afe delta={delta} z={z}"), v.value, Some(o.value), v.error + o.error, 1e-8).strictly_relative()]
        }
        Command::Lambda { delta, z } => {
            let z = parse_complex(&z)?;
            let disc = Discriminant::new(delta)?;
            let l = completed_lambda(z, &disc, LMethod::FiniteCharacterSum, &budget)?;
            let r = completed_lambda(1.0 - z, &disc, LMethod::FiniteCharacterSum, &budget)?;
            vec![VerificationReport::complex(format!("lambda delta={delta} z={z} vs 1-z"), l.value, Some(r.value), l.error + r.error, suites::L_VALUE_TOL).strictly_relative()]
        }
        Command::Poisson => {
            let inst = cfg.instance()?;
            let case = Case { label: format!("p={} k={} alpha={}", inst.p, inst.k, inst.budget.alpha), inst };
            let r = suites::poisson_check(&case)?;
            if let Some(path) = csv {
                let side = elltrace::elliptic::poisson_rhs(&case.inst)?;
                let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                write_lattice_csv(&side, &mut w)?;
                w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            vec![r]
        }
        Command::Xi0 => {
            let inst = cfg.instance()?;
            let trivial = trivial_rep_value(&inst)?;
            let eis = eisenstein_residue_value(&inst)?;
            let case = Case { label: format!("p={} k={} alpha={}", inst.p, inst.k, inst.budget.alpha), inst };
            vec![suites::xi0_check(&case)?.with_detail("eisenstein", eis.value).with_detail("trivial_direct", trivial.value)]
        }
        Command::Main => {
            let inst = cfg.instance()?;
            let case = Case { label: format!("p={} k={} alpha={}", inst.p, inst.k, inst.budget.alpha), inst };
            vec![suites::main_check(&case)?]
        }
        Command::Kernels { x, y, z } => {
            let mut out = Vec::new();
            let x = x.unwrap_or(1.0);
            let f = cutoff_f(x)?;
            out.push(VerificationReport::new(format!("F({x})"), f.value, None, f.error, 0.0));
            let zz = parse_complex(z.as_deref().unwrap_or("1"))?;
            out.push(VerificationReport::complex(format!("F~({zz})"), mellin_f(zz)?, None, 0.0, 0.0));
            let y = y.unwrap_or(1.0);
            for iota in [0u8, 1] {
                let h = dual_kernel_h(iota, y, &ContourSpec::line(1.0))?;
                out.push(VerificationReport::new(format!("H{iota}({y})"), h.value, None, h.error, 0.0));
            }
            out
        }
        Command::Verify { .. } => unreachable!(),
    };
    Ok(reports)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = resolve_config(&cli.common)?;
    let cache = match &cfg.cache_dir {
        Some(dir) => ClassCache::open(dir)?,
        None => ClassCache::in_memory(),
    };
    let json = cli.common.json;
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let emit = |r: &VerificationReport| {
        let line = if json { json_line(r) } else { human_line(r) };
        let _ = writeln!(std::io::stdout(), "{line}");
    };
    match cli.command {
        Command::Verify { suite } => {
            let start = Instant::now();
            let mut sink = emit;
            let mut runner = Runner::new(cfg.fail_fast, &mut sink);
            suites::run(suite, &cfg, &cache, &mut runner)?;
            let passed = runner.reports.iter().filter(|r| r.passed()).count();
            let summary = format!("{suite:?}: {passed}/{} checks passed in {:.1} s", runner.reports.len(), start.elapsed().as_secs_f64());
            if json {
                eprintln!("{summary}");
            } else {
                let _ = writeln!(std::io::stdout(), "{summary}");
            }
            Ok(runner.exit_code())
        }
        command => {
            let start = Instant::now();
            let mut reports = single(&cfg, &cache, command, cli.common.csv.as_ref())?;
            let t = start.elapsed().as_secs_f64() / reports.len().max(1) as f64;
            let mut ok = true;
            for r in &mut reports {
                r.wall_time_s = t;
                ok &= r.passed();
                emit(r);
            }
            Ok(if ok { elltrace_cli::EXIT_PASS } else { elltrace_cli::EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("elltrace: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("2+1i").unwrap(), Complex64::new(2.0, 1.0));
        assert_eq!(parse_complex("0.5-3i").unwrap(), Complex64::new(0.5, -3.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), Complex64::new(1e-3, 20.0));
        assert!(parse_complex("x").is_err());
    }
}
