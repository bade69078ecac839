//! Crawled script records, the on-disk corpus layout, and labeled datasets.
//!
//! A corpus directory holds one `<content_hash>.js` file per script and an
//! `index.jsonl` sidecar with one `{hash, url, page_url, fetched_at}` object
//! per script occurrence. Inline scripts have a `null` url.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::catalog::Vocabulary;
use crate::category::Category;
use crate::entities::EntityRepository;
use crate::error::{Error, Result};
use crate::features::{extract_features_bytes, FeatureRow, FeatureVector};

pub const INDEX_FILE: &str = "index.jsonl";

/// One JavaScript element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptRecord {
    /// Absolute source URL; `None` for inline scripts.
    pub url: Option<String>,
    pub source: Vec<u8>,
    pub page_url: String,
    pub content_hash: String,
    pub fetched_at: i64,
}

impl ScriptRecord {
    pub fn new(
        url: Option<String>,
        source: Vec<u8>,
        page_url: impl Into<String>,
        fetched_at: i64,
    ) -> Self {
        ScriptRecord {
            content_hash: crate::content_hash(&source),
            url,
            source,
            page_url: page_url.into(),
            fetched_at,
        }
    }

    /// The label-store key: the exact URL, or `hash:<digest>` when inline.
    pub fn key(&self) -> String {
        match &self.url {
            Some(u) => u.clone(),
            None => hash_key(&self.content_hash),
        }
    }
}

pub fn hash_key(content_hash: &str) -> String {
    format!("hash:{content_hash}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub hash: String,
    pub url: Option<String>,
    pub page_url: String,
    pub fetched_at: i64,
}

/// Write `records` into a corpus directory, appending to its index.
pub fn write_corpus(dir: &Path, records: &[ScriptRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let index_path = dir.join(INDEX_FILE);
    let index = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&index_path)
        .map_err(|e| Error::io(&index_path, e))?;
    let mut index = BufWriter::new(index);
    for r in records {
        let file = dir.join(format!("{}.js", r.content_hash));
        if !file.exists() {
            fs::write(&file, &r.source).map_err(|e| Error::io(&file, e))?;
        }
        let entry = IndexEntry {
            hash: r.content_hash.clone(),
            url: r.url.clone(),
            page_url: r.page_url.clone(),
            fetched_at: r.fetched_at,
        };
        serde_json::to_writer(&mut index, &entry)?;
        index
            .write_all(b"\n")
            .map_err(|e| Error::io(&index_path, e))?;
    }
    index.flush().map_err(|e| Error::io(&index_path, e))
}

/// Read every script occurrence listed in a corpus directory's index.
pub fn read_corpus(dir: &Path) -> Result<Vec<ScriptRecord>> {
    let index_path = dir.join(INDEX_FILE);
    let f = fs::File::open(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&index_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: IndexEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: index_path.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if entry.hash.len() != 64 || !entry.hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::Parse {
                path: index_path.clone(),
                line: i + 1,
                msg: format!("bad content hash {:?}", entry.hash),
            });
        }
        let file = dir.join(format!("{}.js", entry.hash));
        let source = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let record = ScriptRecord::new(entry.url, source, entry.page_url, entry.fetched_at);
        if record.content_hash != entry.hash {
            return Err(Error::Parse {
                path: file,
                line: 0,
                msg: format!("content does not hash to {}", entry.hash),
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// A labeled training row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub key: String,
    pub features: FeatureVector,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
    pub vocab_version: String,
    pub split_seed: u64,
}

impl LabeledDataset {
    pub fn new(rows: Vec<LabeledRow>, vocab_version: impl Into<String>) -> Self {
        LabeledDataset {
            rows,
            vocab_version: vocab_version.into(),
            split_seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> Option<usize> {
        self.rows.first().map(|r| r.features.len())
    }

    pub fn category_counts(&self) -> [usize; Category::COUNT] {
        let mut counts = [0; Category::COUNT];
        for r in &self.rows {
            counts[r.category.index()] += 1;
        }
        counts
    }

    /// Build from feature-matrix rows, dropping unlabeled ones. All rows must
    /// share one vocabulary version and length.
    pub fn from_feature_rows(rows: Vec<FeatureRow>) -> Result<Self> {
        let mut version: Option<String> = None;
        let mut width: Option<usize> = None;
        let mut out = Vec::new();
        for row in rows {
            match &version {
                None => version = Some(row.vocab_version.clone()),
                Some(v) if *v != row.vocab_version => {
                    return Err(Error::VocabMismatch {
                        expected: v.clone(),
                        actual: row.vocab_version,
                    })
                }
                Some(_) => {}
            }
            match width {
                None => width = Some(row.counts.len()),
                Some(w) if w != row.counts.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: w,
                        actual: row.counts.len(),
                    })
                }
                Some(_) => {}
            }
            if let Some(category) = row.label {
                let features = row.features();
                out.push(LabeledRow {
                    key: row.key,
                    features,
                    category,
                });
            }
        }
        Ok(LabeledDataset::new(out, version.unwrap_or_default()))
    }

    pub fn to_feature_rows(&self) -> Vec<FeatureRow> {
        self.rows
            .iter()
            .map(|r| FeatureRow::new(r.key.clone(), Some(r.category), r.features.clone()))
            .collect()
    }

    /// Restrict every row to a sub-vocabulary of `from`.
    pub fn project(&self, from: &Vocabulary, to: &Vocabulary) -> Result<LabeledDataset> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                Ok(LabeledRow {
                    key: r.key.clone(),
                    features: r.features.project(from, to)?,
                    category: r.category,
                })
            })
            .collect::<Result<_>>()?;
        Ok(LabeledDataset {
            rows,
            vocab_version: to.version().to_string(),
            split_seed: self.split_seed,
        })
    }

    /// Stratified split: within each category, a seeded shuffle sends
    /// `round(holdout * n_c)` rows to the second set.
    pub fn split(&self, holdout: f64, seed: u64) -> (LabeledDataset, LabeledDataset) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::new();
        let mut held = Vec::new();
        for c in Category::ALL {
            let mut idx: Vec<usize> = (0..self.rows.len())
                .filter(|&i| self.rows[i].category == c)
                .collect();
            idx.shuffle(&mut rng);
            let n_held = (holdout * idx.len() as f64).round() as usize;
            for (j, i) in idx.into_iter().enumerate() {
                if j < n_held {
                    held.push(self.rows[i].clone());
                } else {
                    train.push(self.rows[i].clone());
                }
            }
        }
        let mk = |rows| LabeledDataset {
            rows,
            vocab_version: self.vocab_version.clone(),
            split_seed: seed,
        };
        (mk(train), mk(held))
    }
}

/// Output of [`build_dataset`].
#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub dataset: LabeledDataset,
    pub unlabeled: Vec<ScriptRecord>,
    pub per_category: [usize; Category::COUNT],
    /// Input records dropped as duplicate content.
    pub duplicates: usize,
}

/// Label scripts by entity match and featurize them.
///
/// Records are first deduplicated by content hash. Within a group of
/// identical scripts the kept record is the first, by key order, that
/// matches an entity (or the first by key order if none does), so the result
/// does not depend on input order. Rows are emitted sorted by content hash.
pub fn build_dataset(
    scripts: &[ScriptRecord],
    repo: &EntityRepository,
    vocab: &Vocabulary,
) -> DatasetBuild {
    let mut groups: BTreeMap<&str, Vec<&ScriptRecord>> = BTreeMap::new();
    for s in scripts {
        groups.entry(&s.content_hash).or_default().push(s);
    }
    let duplicates = scripts.len() - groups.len();
    let mut rows = Vec::new();
    let mut unlabeled = Vec::new();
    let mut per_category = [0; Category::COUNT];
    for (_, mut group) in groups {
        group.sort_by_key(|s| s.key());
        let matched = group.iter().find_map(|s| {
            let url = s.url.as_deref()?;
            repo.match_entity(url).map(|(_, c)| (*s, c))
        });
        match matched {
            Some((s, category)) => {
                per_category[category.index()] += 1;
                rows.push(LabeledRow {
                    key: s.key(),
                    features: extract_features_bytes(&s.source, vocab),
                    category,
                });
            }
            None => unlabeled.push(group[0].clone()),
        }
    }
    DatasetBuild {
        dataset: LabeledDataset::new(rows, vocab.version()),
        unlabeled,
        per_category,
        duplicates,
    }
}
