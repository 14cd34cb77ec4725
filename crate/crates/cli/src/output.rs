//! Report rendering: JSON lines, a one-line human form and the CSV export of
//! the Poisson term lattice.

use std::io::Write;

use elltrace::elliptic::PoissonSide;
use elltrace::VerificationReport;

use crate::CliError;

pub fn json_line(r: &VerificationReport) -> String {
    let mut v = serde_json::to_value(r).expect("reports serialize");
    v["passed"] = serde_json::Value::Bool(r.passed());
    serde_json::to_string(&v).expect("reports serialize")
}

/// The JSON line with the timing field removed, for reproducibility checks.
pub fn json_line_untimed(r: &VerificationReport) -> String {
    let mut v: serde_json::Value = serde_json::from_str(&json_line(r)).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_s");
    serde_json::to_string(&v).unwrap()
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn human_line(r: &VerificationReport) -> String {
    let verdict = if r.passed() { "PASS" } else { "FAIL" };
    let value = match r.value_im {
        Some(im) => format!("{}{:+.12e}i", num(r.value), im),
        None => num(r.value),
    };
    let mut s = format!("{verdict} {}: value={value} +-{:.1e}", r.quantity, r.error_budget);
    if let (Some(o), Some(rel)) = (r.oracle, r.rel_diff) {
        s.push_str(&format!(" oracle={} rel_diff={rel:.2e} tol={:.1e}", num(o), r.tolerance));
    }
    for d in &r.details {
        s.push_str(&format!(" {}={}", d.name, num(d.value)));
    }
    for w in &r.warnings {
        s.push_str(&format!("\n  warning: {w}"));
    }
    s
}

/// CSV of the kept Poisson terms: one row per (sign, f, l, xi) in the head
/// range of each pair, then one row per pair with xi empty holding the pair
/// total.
pub fn write_lattice_csv(side: &PoissonSide, out: &mut impl Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("csv: {e}"));
    writeln!(out, "sign,f,l,xi,term,pair_error,eta").map_err(io)?;
    for t in &side.pairs {
        let sign = format!("{:?}", t.sign).to_lowercase();
        for &(xi, v) in &t.head {
            writeln!(out, "{sign},{},{},{xi},{v:e},,", t.f, t.l).map_err(io)?;
        }
        writeln!(out, "{sign},{},{},,{:e},{:e},{}", t.f, t.l, t.value, t.error, t.eta).map_err(io)?;
    }
    Ok(())
}
