//! Flat `key = value` text files.
//!
//! Blank lines and lines starting with `#` are ignored. A repeated key
//! overrides the earlier value, which is how command-line overrides are
//! layered on top of a file.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::ParamError;

/// Ordered key/value pairs, consumed key by key while building typed configs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: Vec<(String, String)>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self, ParamError> {
        let mut map = KvMap::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ParamError::Syntax {
                line: n + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ParamError::Syntax {
                    line: n + 1,
                    message: "empty key".into(),
                });
            }
            map.set(key, value.trim());
        }
        Ok(map)
    }

    /// Parses a single `key=value` override.
    pub fn parse_assignment(s: &str) -> Result<(String, String), ParamError> {
        let (k, v) = s.split_once('=').ok_or_else(|| ParamError::Syntax {
            line: 0,
            message: format!("expected key=value, got `{s}`"),
        })?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    pub fn set(&mut self, key: &str, value: &str) {
        if let Some(slot) = self.entries.iter_mut().find(|(k, _)| k == key) {
            slot.1 = value.to_string();
        } else {
            self.entries.push((key.to_string(), value.to_string()));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// Removes and returns the raw value for `key`.
    pub fn take_raw(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    /// Removes `key` and parses it; `Ok(None)` when absent.
    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>, ParamError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| ParamError::InvalidValue {
                    key: key.to_string(),
                    value: raw.clone(),
                    message: e.to_string(),
                }),
        }
    }

    /// Errors on the first key nobody consumed.
    pub fn finish(self) -> Result<(), ParamError> {
        match self.entries.into_iter().next() {
            Some((k, _)) => Err(ParamError::UnknownKey(k)),
            None => Ok(()),
        }
    }
}

/// Renders pairs as `key = value` lines.
pub fn render_kv<'a, I>(pairs: I) -> String
where
    I: IntoIterator<Item = (&'a str, String)>,
{
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}
