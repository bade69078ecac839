use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::category::{Category, Label};
use crate::error::{Error, Result};

/// Whether a script must load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criticality {
    Critical,
    Noncritical,
}

/// Which categories may be blocked, with per-page exceptions.
///
/// JSON form: `{"noncritical": ["advertising", "analytics"],
/// "overrides": {"https://news.example": ["analytics"]}}`. Override keys are
/// page origins; categories listed for an origin are treated as critical on
/// that page. `Unassigned` cannot appear: it is not a [`Category`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    pub noncritical: BTreeSet<Category>,
    #[serde(default, rename = "overrides")]
    pub per_page_overrides: BTreeMap<String, BTreeSet<Category>>,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            noncritical: [Category::Advertising, Category::Analytics].into(),
            per_page_overrides: BTreeMap::new(),
        }
    }
}

/// `scheme://host[:port]` of `page`, lowercased; `page` may be a full URL
/// or already an origin.
pub fn normalize_origin(page: &str) -> Option<String> {
    let url = Url::parse(page).ok()?;
    let origin = url.origin();
    origin.is_tuple().then(|| origin.ascii_serialization())
}

impl Policy {
    /// A policy that blocks nothing.
    pub fn allow_all() -> Self {
        Policy {
            noncritical: BTreeSet::new(),
            per_page_overrides: BTreeMap::new(),
        }
    }

    pub fn parse(json: &str) -> Result<Policy> {
        let raw: Policy = serde_json::from_str(json)?;
        let mut per_page_overrides = BTreeMap::new();
        for (origin, cats) in raw.per_page_overrides {
            let norm = normalize_origin(&origin).ok_or_else(|| {
                Error::InvalidConfig(format!("override key {origin:?} is not an http(s) origin"))
            })?;
            per_page_overrides
                .entry(norm)
                .or_insert_with(BTreeSet::new)
                .extend(cats);
        }
        Ok(Policy {
            noncritical: raw.noncritical,
            per_page_overrides,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Policy> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Policy::parse(&text)
    }

    /// Re-enable `category` on `page`.
    pub fn add_override(&mut self, page: &str, category: Category) -> Result<()> {
        let origin = normalize_origin(page)
            .ok_or_else(|| Error::InvalidConfig(format!("{page:?} is not an http(s) origin")))?;
        self.per_page_overrides
            .entry(origin)
            .or_default()
            .insert(category);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }
}

/// Critical unless the label is a category the policy marks non-critical
/// and the page (a URL or origin) has not re-enabled it. `Unassigned` is
/// always critical.
pub fn decide_criticality(label: Label, policy: &Policy, page_origin: Option<&str>) -> Criticality {
    let Label::Assigned(category) = label else {
        return Criticality::Critical;
    };
    if !policy.noncritical.contains(&category) {
        return Criticality::Critical;
    }
    let overridden = page_origin
        .and_then(normalize_origin)
        .and_then(|o| policy.per_page_overrides.get(&o))
        .is_some_and(|cats| cats.contains(&category));
    if overridden {
        Criticality::Critical
    } else {
        Criticality::Noncritical
    }
}
