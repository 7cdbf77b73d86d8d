//! Run configuration: built-in defaults, an optional `key = value` file and
//! command-line flags, in increasing order of precedence.
//!
//! Config-file keys are the long flag names without the leading dashes;
//! underscores and dashes are interchangeable. Lines starting with `#` are
//! comments. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "method",
    "rho",
    "epsilon",
    "max-iter",
    "rel-tol",
    "inner-max-iter",
    "inner-tol",
    "repr",
    "k",
    "n",
    "p-in",
    "p-out",
    "noise",
    "n-source",
    "n-target",
    "rhos",
    "seed",
    "seeds",
    "strict",
    "out",
    "source",
    "target",
    "input",
];

/// Environment variable that replaces the default seed (0).
pub const SEED_ENV: &str = "GW_SEED";

pub const DEFAULT_RHOS: [f64; 5] = [0.1, 0.2, 0.4, 0.8, 1.6];

/// Parsed config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile(BTreeMap<String, (String, usize)>);

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", idx + 1))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", idx + 1));
            }
            if map.insert(key.clone(), (value.trim().to_string(), idx + 1)).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", idx + 1));
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&(String, usize)> {
        self.0.get(key)
    }

    /// `flag`, else the file's value for `key`, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Input(format!("config line {line}: invalid value {v:?} for `{key}`"))),
        }
    }

    pub fn pick_list<T: FromStr>(&self, flag: Option<Vec<T>>, key: &str) -> Result<Option<Vec<T>>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| CliError::Input(format!("config line {line}: invalid list {v:?} for `{key}`"))),
        }
    }
}

/// Fully resolved settings, echoed verbatim into `report.json`.
///
/// Every command carries the whole set; fields a command does not use keep
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub source: Option<String>,
    pub target: Option<String>,
    pub input: Option<String>,
    pub method: String,
    /// `null` for `partition` means "choose from the representation's grid".
    pub rho: Option<f64>,
    /// Entropic weight used when `method` is `ebpg`.
    pub epsilon: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub inner_max_iter: usize,
    pub inner_tol: f64,
    pub repr: String,
    /// Planted blocks for generated graphs and the cluster count for
    /// `partition`; `null` for `partition` means "from the input labels, else 3".
    pub k: Option<usize>,
    pub n: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Noise level q in percent.
    pub noise: f64,
    pub n_source: usize,
    pub n_target: usize,
    pub rhos: Vec<f64>,
    pub seeds: Vec<u64>,
    pub strict: bool,
}

/// Default seed: `GW_SEED` if set, else 0.
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = ConfigFile::parse("# run\nrho = 0.5\nmax_iter=10\n\nrhos = 0.1, 0.2,0.4\n").unwrap();
        assert_eq!(cfg.pick(None, "rho", 0.1).unwrap(), 0.5);
        assert_eq!(cfg.pick(None, "max-iter", 2000usize).unwrap(), 10);
        assert_eq!(cfg.pick_list::<f64>(None, "rhos").unwrap(), Some(vec![0.1, 0.2, 0.4]));
    }

    #[test]
    fn flags_beat_file_beats_default() {
        let cfg = ConfigFile::parse("rho = 0.5").unwrap();
        assert_eq!(cfg.pick(Some(0.7), "rho", 0.1).unwrap(), 0.7);
        assert_eq!(cfg.pick(None, "rho", 0.1).unwrap(), 0.5);
        assert_eq!(cfg.pick(None, "epsilon", 0.1).unwrap(), 0.1);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ConfigFile::parse("colour = red").unwrap_err().contains("unknown key"));
        assert!(ConfigFile::parse("rho").is_err());
        assert!(ConfigFile::parse("rho = 1\nrho = 2").is_err());
        let cfg = ConfigFile::parse("rho = fast").unwrap();
        assert!(matches!(cfg.pick(None, "rho", 0.1), Err(CliError::Input(_))));
    }
}
