//! Layered option resolution: flag > environment > config file > default.
//!
//! Every resolved key is recorded so a command can echo its effective
//! configuration to `run-config.txt`, which makes runs reproducible from
//! their output directory alone.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blockgen_core::{Error, Result};

pub const ENV_PREFIX: &str = "BLOCKGEN_";

fn env_key(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('-', "_"))
}

#[derive(Debug)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    /// Loads `key = value` lines; `#` starts a comment, blank lines are fine.
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)?;
            for (no, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::schema(no + 1, format!("expected `key = value`, got {line:?}"))
                })?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Resolver {
            file,
            resolved: Vec::new(),
        })
    }

    fn lookup(&self, key: &str) -> Option<(String, &'static str)> {
        if let Ok(v) = std::env::var(env_key(key)) {
            return Some((v, "environment"));
        }
        self.file.get(key).map(|v| (v.clone(), "config file"))
    }

    fn parse<T>(key: &str, raw: &str, origin: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        raw.parse().map_err(|e| {
            Error::invalid(format!("{key} (from {origin}): cannot parse {raw:?}: {e}"))
        })
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    pub fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.lookup(key) {
                Some((raw, origin)) => Self::parse(key, &raw, origin)?,
                None => default,
            },
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    /// Absent everywhere stays `None` and is echoed as `-`.
    pub fn resolve_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.lookup(key) {
                Some((raw, origin)) => Some(Self::parse(key, &raw, origin)?),
                None => None,
            },
        };
        let echo = value.as_ref().map_or_else(|| "-".to_string(), T::to_string);
        self.record(key, echo);
        Ok(value)
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.resolve_opt(key, flag)?.ok_or_else(|| {
            Error::invalid(format!(
                "missing required option --{key} (or {} / config key `{key}`)",
                env_key(key)
            ))
        })
    }

    /// Paths echo through `Display`-less `PathBuf`, so they resolve as text.
    pub fn resolve_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        Ok(self
            .resolve_opt(key, flag.map(|p| p.to_string_lossy().into_owned()))?
            .map(PathBuf::from))
    }

    pub fn require_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        self.resolve_path(key, flag)?.ok_or_else(|| {
            Error::invalid(format!(
                "missing required option --{key} (or {} / config key `{key}`)",
                env_key(key)
            ))
        })
    }

    /// A bare flag is true; env or file may supply `true`/`false`.
    pub fn resolve_switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let value = if flag {
            true
        } else {
            match self.lookup(key) {
                Some((raw, origin)) => Self::parse::<bool>(key, &raw, origin)?,
                None => false,
            }
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn resolved(&self) -> &[(String, String)] {
        &self.resolved
    }
}

/// Echoes the effective configuration. No timestamps: reruns with the same
/// inputs produce byte-identical output directories.
pub fn write_run_config(out_dir: &Path, command: &str, resolved: &[(String, String)]) -> Result<()> {
    let mut text = String::from("# blockgen run-config v1\n");
    text.push_str(&format!("version {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("command {command}\n"));
    for (k, v) in resolved {
        text.push_str(&format!("{k} {v}\n"));
    }
    fs::write(out_dir.join("run-config.txt"), text)?;
    Ok(())
}
