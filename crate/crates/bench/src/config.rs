//! Flat `key = value` config files with `[section]` headers.
//!
//! `#` starts a comment. Lists are comma separated. Every key must be
//! consumed by some section reader, so typos surface as errors naming the key.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

pub const SECTIONS: [&str; 4] = ["corpus", "estimate", "sweep", "denoise"];

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| BenchError::Config(format!("line {}: {msg}", i + 1));
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err(format!("bad section header {line:?}")))?.trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let sec = current.as_ref().ok_or_else(|| err(format!("key {:?} outside any section", k.trim())))?;
            let map = sections.get_mut(sec).expect("section registered");
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(err(format!("duplicate key {sec}.{}", k.trim())));
            }
        }
        Ok(Self { sections, base_dir: PathBuf::from(".") })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::parse(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    pub fn section(&self, name: &str) -> Section {
        Section {
            name: name.to_string(),
            entries: self.sections.get(name).cloned().unwrap_or_default(),
            base_dir: self.base_dir.clone(),
        }
    }
}

/// Consuming view of one section.
#[derive(Debug)]
pub struct Section {
    name: String,
    entries: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Section {
    fn err(&self, key: &str, msg: impl Display) -> BenchError {
        BenchError::Config(format!("{}.{key}: {msg}", self.name))
    }

    pub fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| self.err(key, format!("{e} ({v:?})"))),
        }
    }

    pub fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(v) = self.entries.remove(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| self.err(key, format!("{e} ({s:?})"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn path(&mut self, key: &str) -> Option<PathBuf> {
        self.entries.remove(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_absolute() { p } else { self.base_dir.join(p) }
        })
    }

    /// Validate a value already read.
    pub fn check(&self, key: &str, ok: bool, msg: impl Display) -> Result<()> {
        if ok { Ok(()) } else { Err(self.err(key, msg)) }
    }

    /// Fail on any key nobody asked for.
    pub fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(k) => Err(self.err(k, "unknown key")),
            None => Ok(()),
        }
    }
}

/// Parse a `true`/`false`/`yes`/`no`/`1`/`0` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flag(pub bool);

impl FromStr for Flag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" | "yes" | "1" => Ok(Flag(true)),
            "false" | "no" | "0" => Ok(Flag(false)),
            _ => Err(format!("expected a boolean, got {s:?}")),
        }
    }
}
