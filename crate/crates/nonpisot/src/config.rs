//! Flat key=value configuration files. Lines are `key = value`, blank lines
//! and `#` comments are skipped. The CLI resolves every parameter as
//! flag > config file > built-in default.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {content:?}")]
    BadLine { line: usize, content: String },
    #[error("line {line}: invalid key {key:?}")]
    BadKey { line: usize, key: String },
    #[error("key {key:?}: cannot parse {value:?} as {wanted}")]
    BadValue { key: String, value: String, wanted: &'static str },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    map: BTreeMap<String, String>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn parse_str(text: &str) -> Result<Config, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::BadLine { line, content: trimmed.to_string() });
        };
        let key = key.trim();
        if !valid_key(key) {
            return Err(ConfigError::BadKey { line, key: key.to_string() });
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(Config { map })
}

impl Config {
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn parsed<T: std::str::FromStr>(
        &self,
        key: &str,
        wanted: &'static str,
    ) -> Result<Option<T>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: v.clone(),
                wanted,
            }),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parsed(key, "a real number")
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.parsed(key, "an unsigned integer")
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>, ConfigError> {
        self.parsed(key, "an unsigned integer")
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parsed(key, "an unsigned integer")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_values() {
        let cfg = parse_str("# header\n\n level = 8 \nk=0.5\nname = with spaces ok\n").unwrap();
        assert_eq!(cfg.get("level"), Some("8"));
        assert_eq!(cfg.get_u32("level").unwrap(), Some(8));
        assert_eq!(cfg.get_f64("k").unwrap(), Some(0.5));
        assert_eq!(cfg.get("name"), Some("with spaces ok"));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            parse_str("no equals sign"),
            Err(ConfigError::BadLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_str("ok = 1\nbad key! = 2"),
            Err(ConfigError::BadKey { line: 2, .. })
        ));
        assert!(matches!(
            parse_str("n = seven").unwrap().get_u32("n"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn later_entries_win() {
        let cfg = parse_str("a = 1\na = 2").unwrap();
        assert_eq!(cfg.get("a"), Some("2"));
    }
}
