//! Flat key=value run configuration.
//!
//! A config file supplies defaults; command-line flags override by calling
//! [`Config::set`] on top. Typed getters record which keys were consumed so
//! that typos can be reported instead of silently ignored.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::{FtleError, Result};

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn new() -> Config {
        Config::default()
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines are
    /// ignored. Duplicate keys are rejected (an override belongs on the
    /// command line, not twice in one file).
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::new();
        for (no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FtleError::Config(format!("line {}: expected key=value, got '{raw}'", no + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(FtleError::Config(format!("line {}: empty key", no + 1)));
            }
            if cfg
                .entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(FtleError::Config(format!(
                    "line {}: duplicate key '{key}'",
                    no + 1
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    /// Set (or override) one key, as a command-line flag does.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Raw lookup; marks the key as consumed.
    pub fn get(&self, key: &str) -> Option<String> {
        if let Some(v) = self.entries.get(key) {
            self.used.borrow_mut().insert(key.to_string());
            return Some(v.clone());
        }
        None
    }

    pub fn require(&self, key: &str) -> Result<String> {
        self.get(key)
            .ok_or_else(|| FtleError::Config(format!("missing required key '{key}'")))
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or_else(|| default.to_string())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| FtleError::Config(format!("key '{key}': bad float '{v}'")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| FtleError::Config(format!("missing required key '{key}'")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| FtleError::Config(format!("key '{key}': bad integer '{v}'")))
            })
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| FtleError::Config(format!("key '{key}': bad integer '{v}'")))
            })
            .transpose()
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key).as_deref() {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(FtleError::Config(format!(
                "key '{key}': expected true/false, got '{other}'"
            ))),
        }
    }

    /// Comma-separated float list.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        let s = s.trim();
                        s.parse::<f64>().map_err(|_| {
                            FtleError::Config(format!("key '{key}': bad float '{s}' in list"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    /// Keys present but never consumed by any getter.
    pub fn unknown_keys(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries
            .keys()
            .filter(|k| !used.contains(*k))
            .cloned()
            .collect()
    }

    /// Error out if any key was never consumed (catches typos).
    pub fn reject_unknown(&self) -> Result<()> {
        let unknown = self.unknown_keys();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(FtleError::Config(format!(
                "unknown key(s): {}",
                unknown.join(", ")
            )))
        }
    }

    /// The full resolved configuration, one `key = value` per line in sorted
    /// order — the snapshot written next to artifacts for reproducibility.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}
