//! Flat key=value experiment configuration.
//!
//! A configuration is a command name plus a flat string map, filled from a
//! text file (`key = value` lines, `#` comments) and/or command-line
//! overrides, then read through typed accessors that turn malformed values
//! into [`Error::Config`] with the offending key named.

use crate::error::Error;
use crate::Result;
use std::collections::BTreeMap;

/// A command name with its flat settings. Later assignments to the same key
/// (within a file, or file-then-override) win.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    pub command: String,
    settings: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// An empty configuration for `command`; every setting is defaulted.
    pub fn new(command: impl Into<String>) -> Self {
        ExperimentConfig {
            command: command.into(),
            settings: BTreeMap::new(),
        }
    }

    /// Parse `key = value` text. `#` starts a comment, blank lines are
    /// skipped, and each remaining line must contain `=`.
    pub fn from_text(command: impl Into<String>, text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(command);
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::Config {
                    what: format!("line {}: expected `key = value`, got `{line}`", idx + 1),
                });
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(Error::Config {
                    what: format!("line {}: empty key", idx + 1),
                });
            }
            cfg.set(key, value);
        }
        Ok(cfg)
    }

    /// Read and parse a configuration file.
    pub fn load(command: impl Into<String>, path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            what: format!("cannot read config file `{path}`: {e}"),
        })?;
        Self::from_text(command, &text)
    }

    /// Set or override one key.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.settings.insert(key.into(), value.into());
    }

    /// Raw value of `key`, if present.
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.settings.get(key).map(String::as_str)
    }

    /// String value with a default.
    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    /// Optional numeric value.
    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Config {
                what: format!("key `{key}`: `{s}` is not a number"),
            }),
        }
    }

    /// Numeric value with a default.
    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    /// Required numeric value.
    pub fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?.ok_or_else(|| Error::Config {
            what: format!("missing required key `{key}`"),
        })
    }

    /// Unsigned integer with a default.
    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse::<usize>().map_err(|_| Error::Config {
                what: format!("key `{key}`: `{s}` is not a non-negative integer"),
            }),
        }
    }

    /// Seed-sized integer with a default.
    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse::<u64>().map_err(|_| Error::Config {
                what: format!("key `{key}`: `{s}` is not a non-negative integer"),
            }),
        }
    }

    /// Required string value.
    pub fn str_req(&self, key: &str) -> Result<String> {
        self.raw(key)
            .map(str::to_string)
            .ok_or_else(|| Error::Config {
                what: format!("missing required key `{key}`"),
            })
    }

    /// Comma-separated list of numbers, with a default.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|part| {
                    let part = part.trim();
                    part.parse::<f64>().map_err(|_| Error::Config {
                        what: format!("key `{key}`: `{part}` is not a number"),
                    })
                })
                .collect(),
        }
    }

    /// Reject keys outside the command's accepted set, so typos surface as
    /// configuration errors instead of silently falling back to defaults.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.settings.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config {
                    what: format!(
                        "unknown key `{key}` for command `{}` (accepted: {})",
                        self.command,
                        allowed.join(", ")
                    ),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
// Reference values are spelled at full precision on purpose.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;

    #[test]
    fn file_text_parses_comments_blanks_and_overrides() {
        let text = "\n# a comment\nrho = 1.5   # trailing\n  u_grid = 2, 10 ,100\nname=box:0,1\nrho=2\n";
        let cfg = ExperimentConfig::from_text("demo", text).unwrap();
        assert_eq!(cfg.f64_or("rho", 0.0).unwrap(), 2.0);
        assert_eq!(cfg.list_or("u_grid", &[]).unwrap(), vec![2.0, 10.0, 100.0]);
        assert_eq!(cfg.raw("name"), Some("box:0,1"));
    }

    #[test]
    fn malformed_lines_and_values_are_config_errors() {
        assert!(matches!(
            ExperimentConfig::from_text("demo", "just words\n"),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            ExperimentConfig::from_text("demo", "= 3\n"),
            Err(Error::Config { .. })
        ));
        let cfg = ExperimentConfig::from_text("demo", "tol = soft\n").unwrap();
        assert!(matches!(cfg.f64_or("tol", 1.0), Err(Error::Config { .. })));
        assert!(matches!(cfg.f64_req("missing"), Err(Error::Config { .. })));
    }

    #[test]
    fn key_check_rejects_strangers() {
        let mut cfg = ExperimentConfig::new("demo");
        cfg.set("tol", "1e-6");
        assert!(cfg.check_keys(&["tol", "seed"]).is_ok());
        cfg.set("tolerance", "1e-6");
        assert!(matches!(
            cfg.check_keys(&["tol", "seed"]),
            Err(Error::Config { .. })
        ));
    }
}
