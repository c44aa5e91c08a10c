//! Resolved settings: command-line flag, then `key = value` config file,
//! then the built-in default. Every resolved value is recorded for the
//! manifest.
//!
//! Config grammar: one `key = value` per line, keys are the long flag names
//! without dashes, `#` starts a comment, blank lines are ignored.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use crate::UsageError;

pub struct Settings {
    file: BTreeMap<String, (String, usize)>,
    used: Vec<String>,
    resolved: Vec<(String, String)>,
}

impl Settings {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            file = parse_config(&text).map_err(|e| anyhow!(UsageError(format!("{}: {e}", path.display()))))?;
        }
        Ok(Self {
            file,
            used: Vec::new(),
            resolved: Vec::new(),
        })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.used.push(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!(UsageError(format!("config line {line}: bad value for `{key}`: {e}")))),
        }
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        self.used.push(key.to_string());
        let v = match flag {
            Some(v) => v,
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.used.push(key.to_string());
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.record(key, v.to_string());
        }
        Ok(v)
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| anyhow!(UsageError(format!("missing required setting `--{key}`"))))
    }

    pub fn flag(&mut self, key: &str, flag: bool) -> Result<bool> {
        self.used.push(key.to_string());
        let v = flag || self.from_file::<bool>(key)?.unwrap_or(false);
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Fails on config keys that no setting of this command read.
    pub fn finish(&self) -> Result<()> {
        if let Some((k, (_, line))) = self.file.iter().find(|(k, _)| !self.used.contains(k)) {
            bail!(UsageError(format!("config line {line}: unknown key `{k}`")));
        }
        Ok(())
    }

    pub fn resolved(&self) -> &[(String, String)] {
        &self.resolved
    }
}

pub fn parse_config(text: &str) -> std::result::Result<BTreeMap<String, (String, usize)>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if out.insert(k.to_string(), (v.trim().to_string(), i + 1)).is_some() {
            return Err(format!("line {}: duplicate key `{k}`", i + 1));
        }
    }
    Ok(out)
}
