//! Resolved `key=value` settings: command-line flags over config file over defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got '{line}'", no + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key '{k}'", no + 1)));
        }
    }
    Ok(out)
}

impl Settings {
    /// `defaults` lists every accepted key; unknown keys in the file are rejected.
    pub fn resolve(defaults: &[(&str, &str)], file: Option<&Path>, flags: &[(&str, Option<String>)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
            for (k, v) in parse_pairs(&text)? {
                if !values.contains_key(&k) {
                    return Err(CliError::Usage(format!("unknown config key '{k}' in {}", path.display())));
                }
                values.insert(k, v);
            }
        }
        for (k, v) in flags {
            debug_assert!(values.contains_key(*k), "flag {k} has no default");
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Settings { values })
    }

    pub fn dump(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse().map_err(|e| CliError::Usage(format!("invalid value '{raw}' for {key}: {e}")))
    }

    /// Comma-separated list; empty string gives an empty list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| CliError::Usage(format!("invalid entry '{s}' in {key}: {e}"))))
            .collect()
    }

    /// Non-empty string value.
    pub fn required(&self, key: &str) -> Result<&str> {
        match self.raw(key) {
            "" => Err(CliError::Usage(format!("missing required setting '{key}'"))),
            v => Ok(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    impl Settings {
        fn from_text(text: &str) -> Result<Self> {
            Ok(Settings { values: parse_pairs(text)? })
        }
    }

    const DEFAULTS: &[(&str, &str)] = &[("epochs", "50"), ("n_t", "100"), ("seed", "1")];

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "# comment\nepochs = 7\nn_t=10\n").unwrap();
        let s = Settings::resolve(DEFAULTS, Some(&path), &[("n_t", Some("1000".into())), ("seed", None)]).unwrap();
        assert_eq!(s.get::<usize>("epochs").unwrap(), 7);
        assert_eq!(s.get::<u64>("n_t").unwrap(), 1000);
        assert_eq!(s.get::<u64>("seed").unwrap(), 1);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "epochz=3\n").unwrap();
        assert!(matches!(Settings::resolve(DEFAULTS, Some(&path), &[]), Err(CliError::Usage(m)) if m.contains("epochz")));
        assert!(parse_pairs("a=1\na=2\n").is_err());
        assert!(parse_pairs("novalue\n").is_err());
    }

    #[test]
    fn dump_parse_round_trip() {
        let s = Settings::resolve(DEFAULTS, None, &[("epochs", Some("3".into()))]).unwrap();
        assert_eq!(Settings::from_text(&s.dump()).unwrap(), s);
    }

    #[test]
    fn typed_access() {
        let s = Settings::from_text("masks=0, 4,8\nempty=\nbad=x\n").unwrap();
        assert_eq!(s.list::<usize>("masks").unwrap(), vec![0, 4, 8]);
        assert!(s.list::<usize>("empty").unwrap().is_empty());
        assert!(s.get::<u32>("bad").is_err());
        assert!(s.required("empty").is_err());
    }
}
