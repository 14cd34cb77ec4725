//! Explicit formulas for the elliptic part of the GL(2) trace formula with
//! Hecke operators at a prime power: weighted quadratic L-values, twisted
//! Kloosterman sums, the Poisson-summed elliptic part and the closed form of
//! its zero-frequency term.
//!
//! Every quantity is computed in double precision and carries an error
//! estimate, so identities between them can be checked at a stated tolerance.

pub mod arith;
pub mod charsum;
pub mod elliptic;
pub mod lfun;
pub mod report;
pub mod specfun;

mod error;

pub use error::{Error, Result};
pub use report::{Detail, VerificationReport};

/// A value together with an estimate of its absolute error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

impl<T> Estimate<T> {
    pub fn new(value: T, error: f64) -> Self {
        Estimate { value, error }
    }
}
