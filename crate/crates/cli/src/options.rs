use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Effective options of one command: config-file entries overridden by flags.
#[derive(Clone, Debug, Default)]
pub struct Options {
    values: BTreeMap<String, String>,
}

impl Options {
    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn from_config_file(path: &Path, allowed: &[&str]) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key=value", path.display(), n + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown option `{key}` for this command",
                    path.display(),
                    n + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("missing required option --{key}")))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("--{key} {v}: {e}")))
            })
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// `spcdist <command> key=value …` in key order.
    pub fn provenance(&self, command: &str) -> String {
        let mut line = format!("spcdist {command}");
        for (k, v) in &self.values {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "# comment\nmethod = ss\nout=a.csv\n\n").unwrap();
        let mut opts = Options::from_config_file(&path, &["method", "out"]).unwrap();
        opts.set("method", Some("spc"));
        opts.set("out", None::<String>);
        assert_eq!(opts.get("method"), Some("spc"));
        assert_eq!(opts.get("out"), Some("a.csv"));
        assert_eq!(opts.provenance("dist"), "spcdist dist method=spc out=a.csv");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "colour=red\n").unwrap();
        assert!(Options::from_config_file(&path, &["method"]).is_err());
        fs::write(&path, "method\n").unwrap();
        assert!(Options::from_config_file(&path, &["method"]).is_err());
    }
}
