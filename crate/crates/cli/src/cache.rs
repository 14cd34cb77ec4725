//! Persistent class-number cache.
//!
//! One text file, `class_data.txt`, one record per line:
//!
//! ```text
//! <D> <h> w=<roots of unity> <sha256>      imaginary fields
//! <D> <h> R=<regulator> <sha256>           real fields
//! ```
//!
//! The regulator is written in Rust's shortest round-trip decimal form, so a
//! record reads back bit for bit. The checksum is the hex SHA-256 of the
//! first three fields joined by single spaces. Lines starting with `#` are
//! comments. Records that fail to parse or whose checksum does not match are
//! ignored; the value is recomputed and the file rewritten without them.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use elltrace::arith::{class_data, ClassSource, QuadraticFieldData};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CACHE_FILE: &str = "class_data.txt";
const HEADER: &str = "# elltrace class data: D h (w=roots | R=regulator) sha256";

pub fn checksum(body: &str) -> String {
    Sha256::digest(body.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn body(d: &QuadraticFieldData) -> String {
    match (d.root_count, d.regulator) {
        (Some(w), _) => format!("{} {} w={w}", d.discriminant, d.class_number),
        (None, Some(r)) => format!("{} {} R={r}", d.discriminant, d.class_number),
        (None, None) => unreachable!("class data without roots or regulator"),
    }
}

/// The line stored for one record, without the newline.
pub fn encode(d: &QuadraticFieldData) -> String {
    let b = body(d);
    let c = checksum(&b);
    format!("{b} {c}")
}

/// Parse a record; `None` when malformed or the checksum does not match.
pub fn decode(line: &str) -> Option<QuadraticFieldData> {
    let (b, c) = line.trim_end().rsplit_once(' ')?;
    if checksum(b) != c {
        return None;
    }
    let mut it = b.split(' ');
    let discriminant: i64 = it.next()?.parse().ok()?;
    let class_number: u64 = it.next()?.parse().ok()?;
    let field = it.next()?;
    if it.next().is_some() {
        return None;
    }
    let (regulator, root_count) = if let Some(w) = field.strip_prefix("w=") {
        (None, Some(w.parse().ok()?))
    } else {
        (Some(field.strip_prefix("R=")?.parse().ok()?), None)
    };
    Some(QuadraticFieldData { discriminant, class_number, regulator, root_count })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    /// Records found corrupt on load.
    pub corrupt: u64,
}

/// Class data keyed by fundamental discriminant, backed by a file when a
/// directory is given. Lookups share a read lock; stores take the write lock
/// and append to the file.
pub struct ClassCache {
    path: Option<PathBuf>,
    records: RwLock<HashMap<i64, QuadraticFieldData>>,
    stats: Mutex<CacheStats>,
}

impl ClassCache {
    /// A cache with no backing file.
    pub fn in_memory() -> Self {
        ClassCache { path: None, records: RwLock::new(HashMap::new()), stats: Mutex::new(CacheStats::default()) }
    }

    pub fn open(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(CACHE_FILE);
        let mut records = HashMap::new();
        let mut corrupt = 0;
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
                match decode(line) {
                    Some(d) => {
                        records.insert(d.discriminant, d);
                    }
                    None => corrupt += 1,
                }
            }
        } else {
            fs::write(&path, format!("{HEADER}\n")).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        let cache = ClassCache { path: Some(path), records: RwLock::new(records), stats: Mutex::new(CacheStats { corrupt, ..Default::default() }) };
        if corrupt > 0 {
            // drop the bad lines; their values are recomputed on the next miss
            cache.rewrite()?;
        }
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn stats(&self) -> CacheStats {
        *self.stats.lock().unwrap()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, d: i64) -> Option<QuadraticFieldData> {
        self.records.read().unwrap().get(&d).copied()
    }

    pub fn put(&self, data: QuadraticFieldData) -> Result<(), CliError> {
        let mut records = self.records.write().unwrap();
        records.insert(data.discriminant, data);
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().append(true).open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            f.write_all(format!("{}\n", encode(&data)).as_bytes()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    fn rewrite(&self) -> Result<(), CliError> {
        let Some(path) = &self.path else { return Ok(()) };
        let records = self.records.read().unwrap();
        let mut keys: Vec<&i64> = records.keys().collect();
        keys.sort();
        let mut text = format!("{HEADER}\n");
        for k in keys {
            text.push_str(&encode(&records[k]));
            text.push('\n');
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, path)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Cached value, or compute and store it.
    pub fn get_or_compute(&self, d: i64) -> Result<QuadraticFieldData, CliError> {
        if let Some(v) = self.get(d) {
            self.stats.lock().unwrap().hits += 1;
            return Ok(v);
        }
        self.stats.lock().unwrap().misses += 1;
        let v = class_data(d).map_err(CliError::from)?;
        self.put(v)?;
        Ok(v)
    }
}

impl ClassSource for ClassCache {
    fn class_data(&self, d: i64) -> elltrace::Result<QuadraticFieldData> {
        match self.get_or_compute(d) {
            Ok(v) => Ok(v),
            Err(CliError::Core(e)) => Err(e),
            // an unwritable cache still answers from the computation
            Err(_) => class_data(d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        for d in [-4i64, -3, -23, 5, 12, 229, 9997] {
            let v = class_data(d).unwrap();
            let back = decode(&encode(&v)).unwrap();
            assert_eq!(back, v);
            assert_eq!(back.regulator.map(f64::to_bits), v.regulator.map(f64::to_bits));
        }
        assert!(decode("-4 1 w=4 00").is_none());
        assert!(decode("garbage").is_none());
    }
}
