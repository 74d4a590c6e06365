//! Flat `key = value` config files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Lists are comma-separated, `(order, skip)` pairs are written `order:skip`.
//! This format carries [`crate::features::FeatureConfig`],
//! [`crate::projection::ProjectionConfig`] and [`crate::perturb::PerturbSpec`]
//! between runs; emission order is fixed so emitted files are byte-stable.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    MalformedLine { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("key `{key}`: invalid value `{value}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
}

/// A parsed key-value file, preserving insertion order for emission.
#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut map = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(KvError::MalformedLine { line: line_no })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(KvError::MalformedLine { line: line_no });
            }
            if map.index.contains_key(&key) {
                return Err(KvError::DuplicateKey { line: line_no, key });
            }
            map.set(&key, value.trim());
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        match self.index.get(key) {
            Some(&i) => self.entries[i].1 = value.into(),
            None => {
                self.index.insert(key.to_string(), self.entries.len());
                self.entries.push((key.to_string(), value.into()));
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.index.get(key).map(|&i| self.entries[i].1.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey(key.into()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Emits the map in insertion order as `key = value` lines.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> KvError {
    KvError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool, KvError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

pub fn parse_u64(key: &str, value: &str) -> Result<u64, KvError> {
    value
        .parse()
        .map_err(|e| invalid(key, value, format!("{e}")))
}

pub fn parse_usize(key: &str, value: &str) -> Result<usize, KvError> {
    value
        .parse()
        .map_err(|e| invalid(key, value, format!("{e}")))
}

pub fn parse_f64(key: &str, value: &str) -> Result<f64, KvError> {
    value
        .parse()
        .map_err(|e| invalid(key, value, format!("{e}")))
}

/// Parses a comma-separated list of unsigned integers; empty value = empty list.
pub fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, KvError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e| invalid(key, value, format!("{e}")))
        })
        .collect()
}

/// Parses a comma-separated list of `order:skip` pairs; empty value = empty list.
pub fn parse_pair_list(key: &str, value: &str) -> Result<Vec<(usize, usize)>, KvError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            let (a, b) = s
                .trim()
                .split_once(':')
                .ok_or_else(|| invalid(key, value, "expected order:skip"))?;
            let order = a
                .trim()
                .parse()
                .map_err(|e| invalid(key, value, format!("{e}")))?;
            let skip = b
                .trim()
                .parse()
                .map_err(|e| invalid(key, value, format!("{e}")))?;
            Ok((order, skip))
        })
        .collect()
}

pub fn emit_usize_list(items: impl IntoIterator<Item = usize>) -> String {
    items
        .into_iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn emit_pair_list(items: impl IntoIterator<Item = (usize, usize)>) -> String {
    items
        .into_iter()
        .map(|(o, s)| format!("{o}:{s}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_emit_round_trip() {
        let text = "# comment\nk = 1120\nseed = 42\n\nlist = 1,2,3\nempty =\n";
        let map = KvMap::parse(text).unwrap();
        assert_eq!(map.get("k"), Some("1120"));
        assert_eq!(map.get("empty"), Some(""));
        let reparsed = KvMap::parse(&map.emit()).unwrap();
        assert_eq!(reparsed.get("list"), Some("1,2,3"));
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = KvMap::parse("a = 1\nnope\n").unwrap_err();
        assert_eq!(err, KvError::MalformedLine { line: 2 });
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = KvMap::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, KvError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn pair_list() {
        assert_eq!(
            parse_pair_list("p", "2:1,3:2").unwrap(),
            vec![(2, 1), (3, 2)]
        );
        assert_eq!(parse_pair_list("p", "").unwrap(), vec![]);
        assert!(parse_pair_list("p", "2-1").is_err());
        assert_eq!(emit_pair_list(vec![(2, 1)]), "2:1");
    }
}
