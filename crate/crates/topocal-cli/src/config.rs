//! Plain-text key-value config files: one `key = value` per line, `#`
//! comments. Values act as defaults for the matching command-line options.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected 'key = value', found '{raw}'",
                    path.display(),
                    idx + 1
                );
            };
            values.insert(normalize(key), value.trim().to_string());
        }
        Ok(ConfigMap { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    /// CLI value if present, else the config entry, else the default.
    pub fn resolve<T: FromStr + Clone>(&self, cli: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.resolve_opt(cli, key)?
            .map_or_else(|| Ok(default.clone()), Ok)
    }

    /// CLI value if present, else the config entry, else `None`.
    pub fn resolve_opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key '{key}': bad value '{raw}': {e}")),
        }
    }

    /// Required from either source.
    pub fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.resolve_opt(cli, key)?.ok_or_else(|| {
            anyhow::anyhow!("missing required option --{key} (or config key '{key}')")
        })
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}
