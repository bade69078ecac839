//! Per-script API-token count vectors and the feature-matrix JSONL format.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::catalog::Vocabulary;
use crate::category::Category;
use crate::error::{Error, Result};
use crate::lexer::Tokens;

/// Raw occurrence counts, one slot per vocabulary name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub counts: Vec<u32>,
    pub vocab_version: String,
}

impl FeatureVector {
    pub fn zeros(vocab: &Vocabulary) -> Self {
        FeatureVector {
            counts: vec![0; vocab.len()],
            vocab_version: vocab.version().to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| f64::from(c)).collect()
    }

    /// Restrict to the slots of `to`, a vocabulary selected from `from`.
    pub fn project(&self, from: &Vocabulary, to: &Vocabulary) -> Result<FeatureVector> {
        if self.vocab_version != from.version() {
            return Err(Error::VocabMismatch {
                expected: from.version().to_string(),
                actual: self.vocab_version.clone(),
            });
        }
        let counts = to
            .names()
            .iter()
            .map(|n| {
                from.position(n)
                    .map(|i| self.counts[i])
                    .ok_or_else(|| Error::InvalidConfig(format!("{n:?} not in source vocabulary")))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureVector {
            counts,
            vocab_version: to.version().to_string(),
        })
    }
}

/// Count every vocabulary token in `source`.
pub fn extract_features(source: &str, vocab: &Vocabulary) -> FeatureVector {
    let mut v = FeatureVector::zeros(vocab);
    for tok in Tokens::new(source) {
        if let Some(i) = vocab.position(&tok) {
            v.counts[i] = v.counts[i].saturating_add(1);
        }
    }
    v
}

/// [`extract_features`] over raw bytes, replacing invalid UTF-8.
pub fn extract_features_bytes(source: &[u8], vocab: &Vocabulary) -> FeatureVector {
    extract_features(&String::from_utf8_lossy(source), vocab)
}

/// One line of the feature-matrix export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub key: String,
    pub label: Option<Category>,
    pub counts: Vec<u32>,
    pub vocab_version: String,
}

impl FeatureRow {
    pub fn new(key: impl Into<String>, label: Option<Category>, features: FeatureVector) -> Self {
        FeatureRow {
            key: key.into(),
            label,
            counts: features.counts,
            vocab_version: features.vocab_version,
        }
    }

    pub fn features(&self) -> FeatureVector {
        FeatureVector {
            counts: self.counts.clone(),
            vocab_version: self.vocab_version.clone(),
        }
    }
}

pub fn write_feature_rows<'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = &'a FeatureRow>,
) -> std::io::Result<usize> {
    let mut n = 0;
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Parse one feature-matrix line.
pub fn parse_feature_row(line: &str) -> Result<FeatureRow> {
    Ok(serde_json::from_str(line)?)
}

/// Read a whole feature-matrix file; `origin` labels parse errors.
pub fn read_feature_rows<R: BufRead>(r: R, origin: &std::path::Path) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_feature_row(&line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}
