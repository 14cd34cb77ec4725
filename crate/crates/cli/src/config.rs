//! Run configuration: defaults, then an optional config file, then flags.
//!
//! The file is flat `key = value` text with `[section]` headers:
//!
//! ```text
//! # comment
//! [instance]
//! p = 3
//! k = 1
//! [budget]
//! alpha = 0.4
//! xi_max = 64
//! [theta]
//! center = 0
//! radius = 2
//! [run]
//! seed = 7
//! cache_dir = /tmp/elltrace-cache
//! ```
//!
//! Keys may also appear before any section header.

use std::path::PathBuf;

use elltrace::elliptic::{EllipticInstance, ThetaPair};
use elltrace::lfun::TruncationBudget;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub p: Option<u64>,
    pub k: u32,
    pub alpha: f64,
    pub upsilon: f64,
    pub tol: f64,
    pub xi_max: f64,
    pub l_max: u64,
    pub f_max: u64,
    pub theta_center: f64,
    pub theta_radius: f64,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub fail_fast: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = TruncationBudget::default();
        RunConfig {
            p: None,
            k: 1,
            alpha: b.alpha,
            upsilon: b.upsilon,
            tol: b.tol,
            xi_max: b.xi_max,
            l_max: b.l_max,
            f_max: b.f_max,
            theta_center: 0.0,
            theta_radius: 2.0,
            seed: 1,
            cache_dir: None,
            fail_fast: false,
        }
    }
}

/// Section each key belongs to.
const KEYS: &[(&str, &str)] = &[
    ("p", "instance"),
    ("k", "instance"),
    ("alpha", "budget"),
    ("upsilon", "budget"),
    ("tol", "budget"),
    ("xi_max", "budget"),
    ("l_max", "budget"),
    ("f_max", "budget"),
    ("center", "theta"),
    ("radius", "theta"),
    ("seed", "run"),
    ("cache_dir", "run"),
    ("fail_fast", "run"),
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Usage(format!("config: cannot parse {key} = {v:?}")))
}

impl RunConfig {
    /// Apply a config file's contents on top of `self`.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(_, s)| *s == name) {
                    return Err(CliError::Usage(format!("config line {}: unknown section [{name}]", i + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match KEYS.iter().find(|(k, _)| *k == key) {
                Some((_, s)) if section.as_deref().is_none_or(|cur| cur == *s) => self.set(key, value)?,
                Some((_, s)) => return Err(CliError::Usage(format!("config line {}: {key} belongs in [{s}]", i + 1))),
                None => return Err(CliError::Usage(format!("config line {}: unknown key {key}", i + 1))),
            }
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "p" => self.p = Some(parse(key, v)?),
            "k" => self.k = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "upsilon" => self.upsilon = parse(key, v)?,
            "tol" => self.tol = parse(key, v)?,
            "xi_max" => self.xi_max = parse(key, v)?,
            "l_max" => self.l_max = parse(key, v)?,
            "f_max" => self.f_max = parse(key, v)?,
            "center" => self.theta_center = parse(key, v)?,
            "radius" => self.theta_radius = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "cache_dir" => self.cache_dir = Some(PathBuf::from(v)),
            "fail_fast" => self.fail_fast = parse(key, v)?,
            _ => unreachable!(),
        }
        Ok(())
    }

    pub fn budget(&self) -> Result<TruncationBudget, CliError> {
        let b = TruncationBudget {
            alpha: self.alpha,
            upsilon: self.upsilon,
            tol: self.tol,
            xi_max: self.xi_max,
            l_max: self.l_max,
            f_max: self.f_max,
            ..TruncationBudget::default()
        };
        b.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(b)
    }

    pub fn theta(&self) -> Result<ThetaPair, CliError> {
        let t = ThetaPair::standard(self.theta_center, self.theta_radius);
        t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(t)
    }

    /// The elliptic instance; needs `p`.
    pub fn instance(&self) -> Result<EllipticInstance, CliError> {
        let p = self.p.ok_or_else(|| CliError::Usage("--p is required".into()))?;
        EllipticInstance::new(p, self.k, self.theta()?, self.budget()?).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_file("# run\np = 5\n[budget]\nalpha = 0.4 # split\n[theta]\nradius=1.5\n[run]\nseed = 9\n").unwrap();
        assert_eq!((c.p, c.alpha, c.theta_radius, c.seed), (Some(5), 0.4, 1.5, 9));
        assert_eq!(c.k, 1);
    }

    #[test]
    fn bad_files_are_usage_errors() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_file("[budget]\np = 3\n"), Err(CliError::Usage(_))));
        assert!(matches!(c.apply_file("[nowhere]\n"), Err(CliError::Usage(_))));
        assert!(matches!(c.apply_file("alpha 0.3\n"), Err(CliError::Usage(_))));
        assert!(matches!(c.apply_file("alpha = x\n"), Err(CliError::Usage(_))));
        assert!(matches!(c.apply_file("beta = 1\n"), Err(CliError::Usage(_))));
    }
}
