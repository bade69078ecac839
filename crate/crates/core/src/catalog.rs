//! API-name vocabularies.
//!
//! A catalog file is UTF-8 text with one token name per line. Blank lines and
//! lines starting with `#` are ignored. The repository bundles a catalog of
//! DOM / HTML DOM API names ([`bundled`]).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

const BUNDLED_CATALOG: &str = include_str!("../data/dom-api-catalog.txt");

/// An ordered, duplicate-free list of API token names.
///
/// The version string is derived from the names themselves, so two
/// vocabularies with the same names in the same order share a version.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    names: Arc<[String]>,
    index: Arc<HashMap<String, usize>>,
    version: String,
    selected_from: Option<String>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.selected_from == other.selected_from
    }
}

impl Vocabulary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        Self::build(names, None)
    }

    fn build(names: Vec<String>, selected_from: Option<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        let version = version_of(&names);
        Ok(Vocabulary {
            names: names.into(),
            index: Arc::new(index),
            version,
            selected_from,
        })
    }

    /// Parse catalog text. `origin` is only used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut names = Vec::new();
        let mut seen = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let name = line.trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            if let Some(first) = seen.insert(name.to_string(), lineno + 1) {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("duplicate name {name:?} (first on line {first})"),
                });
            }
            names.push(name.to_string());
        }
        Self::new(names)
    }

    /// Keep only `names` (which must all be present), preserving this
    /// vocabulary's order. The result records this vocabulary as its parent.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut keep = vec![false; self.len()];
        for n in names {
            let i = self
                .position(n)
                .ok_or_else(|| Error::InvalidConfig(format!("{n:?} is not in the vocabulary")))?;
            keep[i] = true;
        }
        let kept = self
            .names
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(n, _)| n.clone())
            .collect();
        Self::build(kept, Some(self.version.clone()))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn selected_from(&self) -> Option<&str> {
        self.selected_from.as_deref()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Render in the catalog file format.
    pub fn to_catalog_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# vocabulary {}", self.version);
        if let Some(parent) = &self.selected_from {
            let _ = writeln!(out, "# selected from {parent}");
        }
        for n in self.names.iter() {
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

fn version_of(names: &[String]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    let digest = hex::encode(h.finalize());
    format!("v{}-{}", names.len(), &digest[..12])
}

/// Load a catalog file.
pub fn load_api_catalog(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Vocabulary::parse(&text, path)
}

/// The bundled DOM / HTML DOM API catalog (1600 names).
pub fn bundled() -> Vocabulary {
    Vocabulary::parse(BUNDLED_CATALOG, Path::new("<bundled catalog>"))
        .expect("bundled catalog is valid")
}
