//! Flat `key = value` text files with optional `[section]` headers.
//!
//! `#` and `;` start comments. Keys before the first header belong to the
//! empty section. Repeated keys are kept in order.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvFile {
    /// `(section, key, value)` in file order.
    pub entries: Vec<(String, String, String)>,
}

impl KvFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut section = String::new();
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::arg(format!("{}:{}: unterminated section header", origin.display(), n + 1))
                })?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::arg(format!(
                    "{}:{}: expected 'key = value', got '{line}'",
                    origin.display(),
                    n + 1
                ))
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::arg(format!("{}:{}: empty key", origin.display(), n + 1)));
            }
            entries.push((section.clone(), key.to_ascii_lowercase(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Entries of one section, in order.
    pub fn section<'a>(&'a self, name: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .iter()
            .filter(move |(s, _, _)| s == name)
            .map(|(_, k, v)| (k.as_str(), v.as_str()))
    }

    pub fn sections(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (s, _, _) in &self.entries {
            if !out.contains(&s.as_str()) {
                out.push(s);
            }
        }
        out
    }
}
