use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("{what}: pole at {at}")]
    Pole { what: &'static str, at: String },
    #[error("{what}: input {value} exceeds bound {bound}")]
    Bound { what: &'static str, value: u128, bound: u128 },
    #[error("{what}: tolerance {requested:e} not met, achieved {achieved:e}")]
    Tolerance { what: &'static str, requested: f64, achieved: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the caller.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Tolerance { .. } | Error::Pole { .. })
    }
}
