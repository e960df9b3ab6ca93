//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use the long
//! flag names, with `-` and `_` interchangeable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(source: &str) -> Result<Self> {
        Self::parse_at(source, None)
    }

    fn parse_at(source: &str, path: Option<&Path>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| Error::Parse {
                path: path.map(|p| p.display().to_string()).unwrap_or_default(),
                line: i + 1,
                message: message.into(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(err("empty key"));
            }
            if values.insert(key, value.trim().to_string()).is_some() {
                return Err(err("duplicate key"));
            }
        }
        Ok(Self {
            path: path.map(Path::to_path_buf),
            values,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_at(&source, Some(path))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|e: T::Err| {
                    Error::Config(format!("{}: invalid value '{v}' for {key}: {e}", self.origin()))
                })
            })
            .transpose()
    }

    /// Fails on keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        let allowed: Vec<String> = allowed.iter().map(|k| normalize(k)).collect();
        match self.values.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::Config(format!("{}: unknown key '{k}'", self.origin()))),
            None => Ok(()),
        }
    }

    fn origin(&self) -> String {
        self.path
            .as_ref()
            .map_or_else(|| "config".to_string(), |p| p.display().to_string())
    }
}
