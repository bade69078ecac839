//! Static JavaScript criticality classification.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`lexer`] and [`features`] turn script source into per-API token counts
//!    over a [`catalog::Vocabulary`] of DOM/HTML API names, and [`rfe`] shrinks
//!    that vocabulary by recursive feature elimination.
//! 2. [`html`], [`entities`] and [`corpus`] turn crawled pages into a labeled
//!    dataset by matching each script's serving domain against a third-party
//!    entity repository.
//! 3. [`classifier`] trains a small feed-forward network over the counts and
//!    gates its predictions with a confidence threshold.
//! 4. [`store`] persists labels with LRU eviction under a byte budget and
//!    decides which categories are blocked under a [`store::Policy`].
//!
//! Nothing here executes JavaScript.

pub mod catalog;
pub mod category;
pub mod classifier;
pub mod corpus;
pub mod entities;
pub mod error;
pub mod features;
pub mod fixture;
pub mod html;
pub mod lexer;
pub mod rfe;
pub mod store;

pub use category::{Category, Label};
pub use error::{Error, Result};

/// Lowercase hex SHA-256 of `bytes`; the content hash used for script keys.
pub fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

/// Seconds since the unix epoch.
pub fn unix_now() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}
