//! Settings resolved from command-line flags, an optional `key=value` file and
//! built-in defaults, in that order of precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use scalex_core::io::parse_config;

/// Keys a configuration file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "law",
    "delta",
    "train_first",
    "max_iters",
    "grad_tol",
    "noise_tol",
    "break_tol",
    "r2_threshold",
    "target",
    "baseline",
    "candidates",
];

pub const CONFIG_ENV: &str = "SCALEX_CONFIG";

#[derive(Debug, Default)]
pub struct FileSettings {
    values: BTreeMap<String, String>,
    origin: String,
}

impl FileSettings {
    /// Loads `explicit`, or the file named by `SCALEX_CONFIG`, or nothing.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => p.into(),
                _ => return Ok(Self::default()),
            },
        };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let origin = path.display().to_string();
        let values = parse_config(&text).with_context(|| format!("in config file {origin}"))?;
        if let Some(bad) = values.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            bail!("unknown key `{bad}` in config file {origin}");
        }
        log::debug!("loaded {} setting(s) from {origin}", values.len());
        Ok(Self { values, origin })
    }

    /// The flag value if given, else the file value if present.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                anyhow::anyhow!(
                    "config file {}: bad `{key}` value `{raw}`: {e}",
                    self.origin
                )
            }),
        }
    }
}

/// Token count written as an integer or in scientific notation (`1e11`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokens(pub u64);

impl FromStr for Tokens {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(v) = s.parse::<u64>() {
            return if v > 0 {
                Ok(Tokens(v))
            } else {
                Err("token count must be positive".into())
            };
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("`{s}` is not a token count"))?;
        if v >= 1.0 && v.fract() == 0.0 && v < 2f64.powi(64) {
            Ok(Tokens(v as u64))
        } else {
            Err(format!("`{s}` is not a positive whole token count"))
        }
    }
}

/// Comma-separated token counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenList(pub Vec<u64>);

impl FromStr for TokenList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<Tokens>().map(|t| t.0))
            .collect::<Result<Vec<_>, _>>()
            .map(TokenList)
    }
}
