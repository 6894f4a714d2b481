//! Plain `key=value` configuration files. Command-line flags always win
//! over file values; defaults fill whatever is left.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Every key a config file may set.
pub const VALID_KEYS: &[&str] = &[
    "papers",
    "citations",
    "fields",
    "out_dir",
    "threads",
    "header",
    "no_filter",
    "malformed_limit",
    "year",
    "years",
    "level",
    "field_ids",
    "direction",
    "kct",
    "k",
    "avg_degree",
    "format",
    "drop_unit_edges",
    "seed",
    "n_papers",
    "tops",
    "secondaries_per_top",
    "intra_rate",
    "cross_rate",
    "mean_out",
    "doc_type_mix",
    "gzip",
];

/// Parsed file values, still as strings; typed access goes through the
/// getters so flag-vs-file precedence stays in one place.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

/// Reads a config file: one `key=value` per line, `#` comments and blank
/// lines ignored. Unknown keys are errors.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut values = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            );
        };
        let key = key.trim();
        if !VALID_KEYS.contains(&key) {
            bail!(
                "{}:{}: unknown key {key:?}; valid keys: {}",
                path.display(),
                lineno + 1,
                VALID_KEYS.join(", ")
            );
        }
        values.insert(key.to_string(), value.trim().to_string());
    }
    Ok(FileConfig { values })
}

impl FileConfig {
    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(VALID_KEYS.contains(&key));
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file value, else the default.
    pub fn resolve<T: Clone + std::str::FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T> {
        Ok(self.resolve_opt(key, flag)?.unwrap_or(default))
    }

    /// Same, without a default.
    pub fn resolve_opt<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => match s.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(_) => bail!("config key {key}: cannot parse {s:?}"),
            },
        }
    }

    /// Booleans: a `false` flag defers to the file (flags can only switch
    /// things on).
    pub fn resolve_flag(&self, key: &str, flag: bool) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                other => bail!("config key {key}: expected a boolean, got {other:?}"),
            },
        }
    }

    pub fn resolve_path(&self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.raw(key).map(PathBuf::from))
    }
}

/// Inclusive `A:B` year range (a bare `A` means `A:A`).
pub fn parse_year_range(s: &str) -> Result<(i32, i32)> {
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let lo: i32 = a.trim().parse().with_context(|| format!("bad year {a:?}"))?;
    let hi: i32 = b.trim().parse().with_context(|| format!("bad year {b:?}"))?;
    if lo > hi {
        bail!("year range {s:?} is empty");
    }
    Ok((lo, hi))
}

/// Comma-separated probabilities for article, book, patent, other.
pub fn parse_doc_type_mix(s: &str) -> Result<[f64; 4]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad doc type mix {s:?}"))?;
    if parts.len() != 4 {
        bail!("doc type mix needs 4 comma-separated probabilities (article,book,patent,other)");
    }
    Ok([parts[0], parts[1], parts[2], parts[3]])
}
