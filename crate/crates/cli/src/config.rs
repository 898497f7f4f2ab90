//! Flat `key = value` configuration files with `[section]` headers.
//!
//! Keys before the first header apply to every subcommand; a section named
//! after the subcommand overrides them. Command-line flags override both.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: Vec<(String, String, String)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`, got `{line}`", i + 1))
            })?;
            entries.push((section.clone(), normalize(k), v.trim().to_string()));
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Last value of `key` in `section`, else in the top-level block.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        let find = |s: &str| self.entries.iter().rev().find(|(sec, k, _)| sec == s && k == key).map(|e| e.2.as_str());
        find(section).or_else(|| find(""))
    }
}

/// Resolves every setting of one subcommand and remembers the outcome, so the
/// manifest can list the full configuration with defaults filled in.
pub struct Resolver {
    section: String,
    config: Config,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(section: &str, config: Config) -> Self {
        Resolver { section: section.to_string(), config, resolved: Vec::new() }
    }

    fn lookup(&self, key: &str) -> Option<&str> {
        self.config.get(&self.section, key)
    }

    /// Flag, else config entry, else `default`.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
    {
        let v = match (flag, self.lookup(key)) {
            (Some(v), _) => v,
            (None, Some(s)) => {
                s.parse().map_err(|_| CliError::Usage(format!("config key `{key}`: invalid value `{s}`")))?
            }
            (None, None) => default,
        };
        self.resolved.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    /// Like [`Resolver::value`] for settings without a default.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
    {
        let v = match (flag, self.lookup(key)) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => {
                Some(s.parse().map_err(|_| CliError::Usage(format!("config key `{key}`: invalid value `{s}`")))?)
            }
            (None, None) => None,
        };
        if let Some(v) = &v {
            self.resolved.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    /// A setting that is not part of the recorded configuration.
    pub fn unrecorded<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        match (flag, self.lookup(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => {
                s.parse().map(Some).map_err(|_| CliError::Usage(format!("config key `{key}`: invalid value `{s}`")))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn section(&self) -> &str {
        &self.section
    }

    pub fn resolved(&self) -> &[(String, String)] {
        &self.resolved
    }
}
