//! The common report shape for identity checks.

use num_complex::Complex64;
use serde::Serialize;

use crate::lfun::TruncationBudget;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detail {
    pub name: String,
    pub value: f64,
}

/// A computed value against an independent oracle. Pass or fail is derived
/// from the stored fields by [`VerificationReport::passed`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub quantity: String,
    pub value: f64,
    /// Imaginary parts, for complex quantities.
    pub value_im: Option<f64>,
    pub oracle: Option<f64>,
    pub oracle_im: Option<f64>,
    /// |value - oracle|, as complex numbers when the imaginary parts are set.
    pub abs_diff: Option<f64>,
    pub rel_diff: Option<f64>,
    /// Combined error estimate of both sides.
    pub error_budget: f64,
    /// Allowed discrepancy, relative to max(1, |oracle|), or to |oracle|
    /// when `strictly_relative` is set.
    pub tolerance: f64,
    pub strictly_relative: bool,
    pub budget: Option<TruncationBudget>,
    pub details: Vec<Detail>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl VerificationReport {
    pub fn new(quantity: impl Into<String>, value: f64, oracle: Option<f64>, error_budget: f64, tolerance: f64) -> Self {
        let abs_diff = oracle.map(|o| (value - o).abs());
        let rel_diff = oracle.map(|o| (value - o).abs() / o.abs().max(f64::MIN_POSITIVE));
        VerificationReport {
            quantity: quantity.into(),
            value,
            value_im: None,
            oracle,
            oracle_im: None,
            abs_diff,
            rel_diff,
            error_budget,
            tolerance,
            strictly_relative: false,
            budget: None,
            details: Vec::new(),
            warnings: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn complex(quantity: impl Into<String>, value: Complex64, oracle: Option<Complex64>, error_budget: f64, tolerance: f64) -> Self {
        let mut r = VerificationReport::new(quantity, value.re, oracle.map(|o| o.re), error_budget, tolerance);
        r.value_im = Some(value.im);
        if let Some(o) = oracle {
            let d = (value - o).norm();
            r.oracle_im = Some(o.im);
            r.abs_diff = Some(d);
            r.rel_diff = Some(d / o.norm().max(f64::MIN_POSITIVE));
        }
        r
    }

    /// Measure the tolerance against |oracle| alone.
    pub fn strictly_relative(mut self) -> Self {
        self.strictly_relative = true;
        self
    }

    pub fn with_warnings(mut self, warnings: impl IntoIterator<Item = String>) -> Self {
        self.warnings.extend(warnings);
        self
    }

    pub fn with_budget(mut self, budget: TruncationBudget) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_detail(mut self, name: impl Into<String>, value: f64) -> Self {
        self.details.push(Detail { name: name.into(), value });
        self
    }

    /// |value - oracle| <= tolerance * max(1, |oracle|), and the value is
    /// finite. Reports without an oracle pass when finite.
    pub fn passed(&self) -> bool {
        if !self.value.is_finite() || !self.value_im.unwrap_or(0.0).is_finite() {
            return false;
        }
        match (self.oracle, self.abs_diff) {
            (Some(o), Some(d)) => {
                let size = Complex64::new(o, self.oracle_im.unwrap_or(0.0)).norm();
                d <= self.tolerance * if self.strictly_relative { size } else { size.max(1.0) }
            }
            _ => true,
        }
    }
}
