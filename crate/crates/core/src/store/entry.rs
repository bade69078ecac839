use serde::{Deserialize, Serialize};

use crate::category::Label;
use crate::error::{Error, Result};

/// Tolerated difference between the labeling host's clock and ours.
pub const CLOCK_SKEW_SECS: i64 = 300;

/// One stored label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    /// Exact script URL, or `hash:<sha256>` for inline scripts.
    pub key: String,
    /// Lowercased hostname serving the script; empty for inline scripts.
    pub domain: String,
    #[serde(rename = "category")]
    pub label: Label,
    pub confidence: f64,
    pub labeled_at: i64,
    #[serde(default)]
    pub last_used: i64,
}

/// The interchange form: a [`LabelEntry`] without `last_used`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotLine<'a> {
    key: std::borrow::Cow<'a, str>,
    domain: std::borrow::Cow<'a, str>,
    category: Label,
    confidence: f64,
    labeled_at: i64,
}

impl LabelEntry {
    pub fn new(
        key: impl Into<String>,
        domain: impl Into<String>,
        label: Label,
        confidence: f64,
        labeled_at: i64,
    ) -> Self {
        LabelEntry {
            key: key.into(),
            domain: domain.into(),
            label,
            confidence,
            labeled_at,
            last_used: 0,
        }
    }

    /// Check the entry invariants: non-empty key, confidence in `[0, 1]`,
    /// `0 <= labeled_at <= now` (with [`CLOCK_SKEW_SECS`] of slack).
    pub fn validate(&self) -> Result<()> {
        if self.key.is_empty() {
            return Err(Error::Store("entry key is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Store(format!(
                "{}: confidence {} outside [0, 1]",
                self.key, self.confidence
            )));
        }
        if self.labeled_at < 0 || self.labeled_at > crate::unix_now() + CLOCK_SKEW_SECS {
            return Err(Error::Store(format!(
                "{}: labeled_at {} is negative or in the future",
                self.key, self.labeled_at
            )));
        }
        Ok(())
    }

    /// One JSONL snapshot line, without the trailing newline.
    pub fn to_snapshot_line(&self) -> String {
        serde_json::to_string(&SnapshotLine {
            key: self.key.as_str().into(),
            domain: self.domain.as_str().into(),
            category: self.label,
            confidence: self.confidence,
            labeled_at: self.labeled_at,
        })
        .expect("snapshot lines always serialize")
    }

    /// Parse and validate one snapshot line; `last_used` is left at 0.
    pub fn from_snapshot_line(line: &str) -> Result<LabelEntry> {
        let s: SnapshotLine = serde_json::from_str(line)?;
        let e = LabelEntry::new(s.key, s.domain, s.category, s.confidence, s.labeled_at);
        e.validate()?;
        Ok(e)
    }

    /// Bytes this entry counts against the store capacity: its snapshot
    /// line plus newline.
    pub fn accounted_size(&self) -> u64 {
        self.to_snapshot_line().len() as u64 + 1
    }
}
