//! The eight script categories and the `Unassigned` fallback.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A script category. The integer encoding (`index`) is stable and is recorded
/// in every model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Advertising,
    Analytics,
    Social,
    Video,
    CustomerSuccess,
    Utility,
    Hosting,
    Content,
}

impl Category {
    pub const COUNT: usize = 8;

    pub const ALL: [Category; Category::COUNT] = [
        Category::Advertising,
        Category::Analytics,
        Category::Social,
        Category::Video,
        Category::CustomerSuccess,
        Category::Utility,
        Category::Hosting,
        Category::Content,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Category> {
        Category::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Advertising => "advertising",
            Category::Analytics => "analytics",
            Category::Social => "social",
            Category::Video => "video",
            Category::CustomerSuccess => "customer_success",
            Category::Utility => "utility",
            Category::Hosting => "hosting",
            Category::Content => "content",
        }
    }

    /// Translate a third-party-web entity category string.
    ///
    /// Upstream categories with no counterpart here (`cdn`, `marketing`,
    /// `tag-manager`, `consent-provider`, `other`) map to `None`.
    pub fn from_entity_category(s: &str) -> Option<Category> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "ad" | "ads" | "advertising" => Category::Advertising,
            "analytics" | "analytic" => Category::Analytics,
            "social" => Category::Social,
            "video" => Category::Video,
            "customer-success" | "customer_success" | "customer success" => {
                Category::CustomerSuccess
            }
            "utility" => Category::Utility,
            "hosting" => Category::Hosting,
            "content" => Category::Content,
            _ => return None,
        })
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A classification outcome: one of the eight categories, or `Unassigned` when
/// the classifier was not confident enough.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Assigned(Category),
    Unassigned,
}

impl Label {
    pub fn category(self) -> Option<Category> {
        match self {
            Label::Assigned(c) => Some(c),
            Label::Unassigned => None,
        }
    }

    /// Category index, with `Unassigned` as [`Category::COUNT`].
    pub fn index(self) -> usize {
        match self {
            Label::Assigned(c) => c.index(),
            Label::Unassigned => Category::COUNT,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Assigned(c) => c.as_str(),
            Label::Unassigned => "unassigned",
        }
    }
}

impl From<Category> for Label {
    fn from(c: Category) -> Self {
        Label::Assigned(c)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unassigned" {
            Ok(Label::Unassigned)
        } else {
            s.parse().map(Label::Assigned)
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
