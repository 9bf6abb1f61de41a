//! Flat key=value config file support. Precedence: CLI flag, then config
//! file entry, then built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("config file {}: {e}", path.display()))
        })?;
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!(
                    "config file {} line {}: expected `key = value`",
                    path.display(),
                    idx + 1
                ))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// CLI value if given, else the config entry, else the default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        self.resolve_opt(cli, key)
            .map(|v| v.unwrap_or(default))
    }

    /// CLI value if given, else the config entry; None when neither.
    pub fn resolve_opt<T: FromStr + Clone>(
        &self,
        cli: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Validation(format!("config key `{key}`: bad value `{raw}`"))),
            None => Ok(None),
        }
    }

    /// Like `resolve_opt` but the value must come from somewhere.
    pub fn require<T: FromStr + Clone>(&self, cli: Option<T>, key: &str) -> Result<T, CliError> {
        self.resolve_opt(cli, key)?.ok_or_else(|| {
            CliError::Validation(format!("missing required `--{key}` (or config key `{key}`)"))
        })
    }
}
