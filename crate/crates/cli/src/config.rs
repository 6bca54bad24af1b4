//! Run settings: a flat `key=value` file, overridden by command-line flags,
//! filled in from per-command defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

use crate::error::CliError;

/// Settings for one command after merging file, flags and defaults.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved {
    command: String,
    values: BTreeMap<String, String>,
}

/// Parse `key=value` lines. Blank lines and `#` comments are skipped, keys may
/// use `-` or `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

impl Resolved {
    /// Merge, in increasing priority: `defaults`, the `--config` file, then
    /// flags given on the command line. File keys must name an argument of
    /// the command.
    pub fn from_matches(
        command: &str,
        definition: &Command,
        matches: &ArgMatches,
        defaults: &[(&str, &str)],
    ) -> Result<Self, CliError> {
        let known: Vec<String> = definition
            .get_arguments()
            .map(|a| a.get_id().as_str().to_string())
            .filter(|id| id != "config" && id != "help")
            .collect();
        let mut values: BTreeMap<String, String> =
            defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();

        if let Some(path) = flag_value(matches, "config") {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("cannot read config {path}: {e}")))?;
            for (k, v) in parse_config(&text)? {
                if k == "command" {
                    if v != command {
                        return Err(CliError::Usage(format!("config is for `{v}`, not `{command}`")));
                    }
                    continue;
                }
                if !known.contains(&k) {
                    return Err(CliError::Usage(format!("unknown config key `{k}` for {command}")));
                }
                values.insert(k, v);
            }
        }
        for id in &known {
            if matches.value_source(id) == Some(ValueSource::CommandLine) {
                if let Some(v) = flag_value(matches, id) {
                    values.insert(id.clone(), v);
                }
            }
        }
        Ok(Self { command: command.to_string(), values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key).ok_or_else(|| CliError::Usage(format!("missing required setting `{key}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("bad value for `{key}`: `{v}` ({e})"))))
            .transpose()
    }

    pub fn get_req<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| CliError::Usage(format!("missing required setting `{key}`")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.require(key).map(PathBuf::from)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }

    /// Record a derived value (such as a default computed from the data) so
    /// the snapshot pins it.
    pub fn pin(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// The snapshot: `command=...` then every setting in key order. Feeding
    /// it back through `--config` reproduces the run.
    pub fn snapshot(&self) -> String {
        let mut s = format!("command={}\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    pub fn write_snapshot(&self, dir: &Path) -> Result<(), CliError> {
        fs::write(dir.join("config.resolved"), self.snapshot()).map_err(CliError::from)
    }
}

fn flag_value(matches: &ArgMatches, id: &str) -> Option<String> {
    if let Ok(Some(v)) = matches.try_get_one::<String>(id) {
        return Some(v.clone());
    }
    if let Ok(Some(b)) = matches.try_get_one::<bool>(id) {
        return Some(b.to_string());
    }
    None
}
