//! File-backed cache of the structural constants.
//!
//! One human-readable versioned file, five tab-separated columns per line:
//! `name  beta  tolerance  value  error`. Ratio constants are keyed by their
//! flatness order; `beta`-independent constants use `-`. A corrupt file is
//! rebuilt with a warning, never trusted.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cr_census::constants::{
    compute_structural_constants, ConstantValue, ConstantsError, StructuralConstants,
};

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "CR_CENSUS_CACHE_DIR";

const CACHE_FILE: &str = "constants-cache.txt";
const HEADER: &str = "# cr-census constants cache v1";

/// Cache directory: the environment override or `.cr-census-cache`.
pub fn cache_dir() -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(".cr-census-cache"),
    }
}

type Key = (String, String, String);

/// In-memory view of the cache file, written back after each insertion.
pub struct ConstantsCache {
    path: PathBuf,
    entries: BTreeMap<Key, ConstantValue>,
}

fn format_beta(beta: Option<f64>) -> String {
    match beta {
        Some(b) => format!("{b}"),
        None => "-".to_string(),
    }
}

impl ConstantsCache {
    pub fn open(dir: &Path) -> Self {
        let path = dir.join(CACHE_FILE);
        let entries = match std::fs::read_to_string(&path) {
            Ok(text) => match Self::parse(&text) {
                Ok(entries) => entries,
                Err(msg) => {
                    eprintln!("warning: rebuilding corrupt constants cache ({msg})");
                    BTreeMap::new()
                }
            },
            Err(_) => BTreeMap::new(),
        };
        Self { path, entries }
    }

    /// Opens the default location ([`cache_dir`]).
    pub fn open_default() -> Self {
        Self::open(&cache_dir())
    }

    fn parse(text: &str) -> Result<BTreeMap<Key, ConstantValue>, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == HEADER => {}
            other => return Err(format!("bad header {other:?}")),
        }
        let mut entries = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(format!("line {}: expected 5 columns", i + 2));
            }
            let value: f64 = cols[3]
                .parse()
                .map_err(|_| format!("line {}: bad value", i + 2))?;
            let error: f64 = cols[4]
                .parse()
                .map_err(|_| format!("line {}: bad error", i + 2))?;
            entries.insert(
                (cols[0].to_string(), cols[1].to_string(), cols[2].to_string()),
                ConstantValue { value, error },
            );
        }
        Ok(entries)
    }

    fn write_back(&self) {
        let mut out = String::from(HEADER);
        out.push('\n');
        for ((name, beta, tol), cv) in &self.entries {
            out.push_str(&format!("{name}\t{beta}\t{tol}\t{}\t{}\n", cv.value, cv.error));
        }
        if let Some(parent) = self.path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        if let Err(e) = std::fs::write(&self.path, out) {
            eprintln!("warning: cannot persist constants cache: {e}");
        }
    }

    pub fn lookup(&self, name: &str, beta: Option<f64>, tol: f64) -> Option<ConstantValue> {
        self.entries
            .get(&(name.to_string(), format_beta(beta), format!("{tol}")))
            .copied()
    }

    pub fn store(&mut self, name: &str, beta: Option<f64>, tol: f64, value: ConstantValue) {
        self.entries.insert(
            (name.to_string(), format_beta(beta), format!("{tol}")),
            value,
        );
        self.write_back();
    }

    /// The full constant suite at `beta`, from cache when every member is
    /// present, otherwise computed and stored.
    pub fn structural_constants(
        &mut self,
        beta: f64,
        tol: f64,
    ) -> Result<StructuralConstants, ConstantsError> {
        let hit = (|| {
            Some(StructuralConstants {
                beta,
                kappa: self.lookup("kappa", Some(beta), tol)?,
                kappa_prime: self.lookup("kappa_prime", Some(beta), tol)?,
                c: self.lookup("c", None, tol)?,
                c2: self.lookup("c2", None, tol)?,
                s: self.lookup("s", None, tol)?,
                omega3: self.lookup("omega3", None, tol)?,
                c_prime: self.lookup("c_prime", None, tol)?,
                c0_sq: self.lookup("c0_sq", None, tol)?,
            })
        })();
        if let Some(k) = hit {
            return Ok(k);
        }
        let k = compute_structural_constants(beta, tol)?;
        self.store("kappa", Some(beta), tol, k.kappa);
        self.store("kappa_prime", Some(beta), tol, k.kappa_prime);
        self.store("c", None, tol, k.c);
        self.store("c2", None, tol, k.c2);
        self.store("s", None, tol, k.s);
        self.store("omega3", None, tol, k.omega3);
        self.store("c_prime", None, tol, k.c_prime);
        self.store("c0_sq", None, tol, k.c0_sq);
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("cr-census-cache-test-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn store_and_lookup_round_trip() {
        let dir = tmpdir("roundtrip");
        let mut cache = ConstantsCache::open(&dir);
        let cv = ConstantValue {
            value: 1.25,
            error: 1e-9,
        };
        cache.store("s", None, 1e-8, cv);
        // Fresh open re-reads the file.
        let cache2 = ConstantsCache::open(&dir);
        assert_eq!(cache2.lookup("s", None, 1e-8), Some(cv));
        // A different tolerance is a different key.
        assert_eq!(cache2.lookup("s", None, 1e-6), None);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn corrupt_cache_is_rebuilt() {
        let dir = tmpdir("corrupt");
        std::fs::write(dir.join(CACHE_FILE), "garbage\nmore garbage\n").unwrap();
        let cache = ConstantsCache::open(&dir);
        assert!(cache.entries.is_empty());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
