//! `key=value` config files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys a config file may set. Flags of the same name win over the file.
pub const KEYS: &[&str] = &[
    "budget",
    "corpus",
    "coupling",
    "jobs",
    "lm-exclude-self",
    "lm-order",
    "lm-window",
    "operators",
    "policy",
    "scope",
    "seed",
    "step-limit",
    "trials",
    "budget-steps",
];

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{k}`", n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Flag, else config file, else default. Every value handed out is recorded so the effective
/// configuration can be hashed into the outputs.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    pub effective: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Resolver {
            file,
            effective: BTreeMap::new(),
        }
    }

    /// Records an input that is not a tunable, such as the subcommand or a subject path.
    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.effective.insert(key.to_string(), value.into());
    }

    pub fn raw(&mut self, key: &str, flag: Option<String>) -> Option<String> {
        let v = flag.or_else(|| self.file.get(key).cloned());
        if let Some(v) = &v {
            self.effective.insert(key.to_string(), v.clone());
        }
        v
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<String>, default: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key, flag).unwrap_or_else(|| default.to_string());
        self.effective.insert(key.to_string(), v.clone());
        v.parse()
            .map_err(|e| CliError::Usage(format!("--{key} {v}: {e}")))
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<String>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.raw(key, flag)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::Usage(format!("--{key} {v}: {e}")))
            })
            .transpose()
    }

    /// A switch: present on the command line, or `true` in the file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let v = if flag { Some("true".to_string()) } else { None };
        self.get(key, v, "false")
    }

    /// A list: repeated flags, else a comma-separated file value.
    pub fn list(&mut self, key: &str, flags: Vec<String>, default: &[&str]) -> Vec<String> {
        let v = if flags.is_empty() {
            match self.file.get(key) {
                Some(v) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                None => default.iter().map(|s| s.to_string()).collect(),
            }
        } else {
            flags
        };
        self.effective.insert(key.to_string(), v.join(","));
        v
    }
}

/// A selection budget: a fraction of the pool when written with a decimal point, else a count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Fraction(f64),
    Count(usize),
}

impl Budget {
    /// Fractions round up, so any positive fraction selects at least one mutant.
    pub fn kappa(self, pool: usize) -> usize {
        match self {
            Budget::Fraction(b) => ((b * pool as f64 - 1e-9).ceil() as usize).clamp(1, pool.max(1)),
            Budget::Count(k) => k.min(pool),
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(['.', 'e', 'E']) {
            let b: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
            if b > 0.0 && b <= 1.0 {
                Ok(Budget::Fraction(b))
            } else {
                Err("a budget fraction must lie in (0, 1]".into())
            }
        } else {
            match s.parse::<usize>() {
                Ok(0) => Err("a budget count must be at least 1".into()),
                Ok(k) => Ok(Budget::Count(k)),
                Err(_) => Err(format!("`{s}` is not a budget")),
            }
        }
    }
}
