//! Third-party entity repository and serving-domain matching.
//!
//! The entities file is a JSON array of `{"name", "domains", "category"}`
//! records, a strict-JSON rendering of the third-party-web entities list.
//! Domain patterns of the form `*.example.com` and plain `example.com` both
//! act as label-aligned suffixes: each matches the domain itself and every
//! subdomain of it.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use tracing::{debug, warn};
use url::Url;

use crate::category::Category;
use crate::error::{Error, Result};

const BUNDLED_ENTITIES: &str = include_str!("../data/entities.json");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub name: String,
    /// Normalized domain suffixes (lowercase, no wildcard prefix).
    pub domains: Vec<String>,
    pub category: Category,
}

/// An entity record as it appears in the file.
#[derive(Debug, Clone, Deserialize)]
pub struct EntityRecord {
    pub name: String,
    pub domains: Vec<String>,
    pub category: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub loaded: usize,
    /// Records whose category has no counterpart among the eight.
    pub skipped_unmapped: usize,
    /// Suffixes claimed by more than one entity (first one wins).
    pub suffix_conflicts: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EntityRepository {
    entities: Vec<Entity>,
    suffix_index: HashMap<String, usize>,
    stats: LoadStats,
}

fn normalize_domain(pattern: &str) -> Option<String> {
    let d = pattern.trim().trim_end_matches('.').to_ascii_lowercase();
    let d = d.strip_prefix("*.").unwrap_or(&d);
    if d.is_empty() || d.contains('*') || d.contains('/') || d.starts_with('.') {
        return None;
    }
    Some(d.to_string())
}

impl EntityRepository {
    pub fn from_records(records: Vec<EntityRecord>) -> Result<Self> {
        let mut repo = EntityRepository::default();
        for (i, rec) in records.into_iter().enumerate() {
            if rec.domains.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "entity #{i} ({:?}) has no domains",
                    rec.name
                )));
            }
            let Some(category) = Category::from_entity_category(&rec.category) else {
                debug!(entity = %rec.name, category = %rec.category, "skipping unmapped entity category");
                repo.stats.skipped_unmapped += 1;
                continue;
            };
            let domains: Vec<String> = rec
                .domains
                .iter()
                .filter_map(|d| normalize_domain(d))
                .collect();
            if domains.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "entity #{i} ({:?}) has no usable domains",
                    rec.name
                )));
            }
            repo.insert(Entity {
                name: rec.name,
                domains,
                category,
            });
        }
        if repo.stats.skipped_unmapped > 0 || repo.stats.suffix_conflicts > 0 {
            warn!(
                skipped = repo.stats.skipped_unmapped,
                conflicts = repo.stats.suffix_conflicts,
                "entity repository loaded with skips"
            );
        }
        Ok(repo)
    }

    fn insert(&mut self, entity: Entity) {
        let idx = self.entities.len();
        for d in &entity.domains {
            match self.suffix_index.get(d) {
                Some(&owner) if owner != idx => {
                    debug!(
                        suffix = %d,
                        kept = %self.entities[owner].name,
                        dropped = %entity.name,
                        "entity suffix conflict"
                    );
                    self.stats.suffix_conflicts += 1;
                }
                Some(_) => {}
                None => {
                    self.suffix_index.insert(d.clone(), idx);
                }
            }
        }
        self.entities.push(entity);
        self.stats.loaded += 1;
    }

    pub fn parse(json: &str) -> Result<Self> {
        let records: Vec<EntityRecord> = serde_json::from_str(json)?;
        Self::from_records(records)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    /// Entity owning the longest label-aligned suffix of `host`.
    pub fn match_host(&self, host: &str) -> Option<&Entity> {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let mut candidate = host.as_str();
        loop {
            if let Some(&i) = self.suffix_index.get(candidate) {
                return Some(&self.entities[i]);
            }
            let (_, rest) = candidate.split_once('.')?;
            candidate = rest;
        }
    }

    /// Entity serving `url`, if its hostname falls under a known suffix.
    pub fn match_entity(&self, url: &str) -> Option<(&Entity, Category)> {
        let host = registrable_domain(url).ok()?;
        self.match_host(&host).map(|e| (e, e.category))
    }
}

/// Read an entities file.
pub fn load_entities(path: impl AsRef<Path>) -> Result<EntityRepository> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EntityRepository::parse(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

/// The bundled third-party-web entities snapshot.
pub fn bundled() -> EntityRepository {
    EntityRepository::parse(BUNDLED_ENTITIES).expect("bundled entities are valid")
}

/// Lowercased hostname of `url`. Matching is suffix-based, so no public
/// suffix computation happens here.
pub fn registrable_domain(url: &str) -> Result<String> {
    let parsed = Url::parse(url).map_err(|e| Error::InvalidUrl {
        url: url.to_string(),
        msg: e.to_string(),
    })?;
    host_of(&parsed).ok_or_else(|| Error::NoHostname(url.to_string()))
}

pub fn host_of(url: &Url) -> Option<String> {
    let h = url.host_str()?;
    if h.is_empty() {
        return None;
    }
    Some(h.trim_end_matches('.').to_ascii_lowercase())
}
