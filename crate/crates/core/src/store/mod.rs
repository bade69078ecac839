//! Capacity-bounded label store and the criticality policy.
//!
//! Entries are keyed by exact script URL (or `hash:<sha256>` for inline
//! scripts). Size is accounted as the byte length of each entry's JSONL
//! snapshot line plus newline; when a put pushes the total past
//! `capacity_bytes`, least-recently-used entries are evicted.
//!
//! Reads take a shared lock. A hit stamps the entry's recency atomically
//! and queues the key; the queue is folded into the LRU order by the next
//! writer, so readers never contend on the write lock.

mod entry;
mod log;
mod policy;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};

use parking_lot::{Mutex, RwLock};
use url::Url;

pub use entry::{LabelEntry, CLOCK_SKEW_SECS};
pub use policy::{decide_criticality, normalize_origin, Criticality, Policy};

use self::log::{Log, Record};
use crate::category::{Category, Label};
use crate::entities::host_of;
use crate::error::{Error, Result};

/// Default capacity: 50 MiB.
pub const DEFAULT_CAPACITY_BYTES: u64 = 50 * 1024 * 1024;

/// Queued recency updates that force a fold even without writes.
const MAX_PENDING_TOUCHES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreConfig {
    pub capacity_bytes: u64,
    /// Log file; `None` keeps the store in memory only.
    pub path: Option<PathBuf>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            capacity_bytes: DEFAULT_CAPACITY_BYTES,
            path: None,
        }
    }
}

/// Result of [`LabelStore::get`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub entry: LabelEntry,
    /// True when synthesized from the labels of other scripts on the same
    /// host rather than stored under the requested key.
    pub inferred: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub imported: usize,
    pub skipped: usize,
}

/// Anything that resolves script keys to labels.
pub trait LabelSource: Send + Sync {
    fn lookup(&self, key: &str) -> Result<Option<Lookup>>;
}

struct Slot {
    entry: LabelEntry,
    size: u64,
    /// Most recent access tick, updated under the read lock.
    tick: AtomicU64,
    last_used: AtomicI64,
    /// Tick under which the slot currently sits in `Inner::lru`.
    lru_tick: u64,
}

impl Slot {
    fn snapshot(&self) -> LabelEntry {
        LabelEntry {
            last_used: self.last_used.load(Ordering::Relaxed),
            ..self.entry.clone()
        }
    }
}

#[derive(Default)]
struct DomainTally {
    counts: [usize; Category::COUNT + 1],
    keys: BTreeSet<String>,
}

#[derive(Default)]
struct Inner {
    slots: HashMap<String, Slot>,
    lru: BTreeMap<u64, String>,
    domains: HashMap<String, DomainTally>,
    bytes: u64,
    log: Option<Log>,
}

impl Inner {
    fn insert(&mut self, entry: LabelEntry, tick: u64) {
        self.remove(&entry.key);
        let size = entry.accounted_size();
        if !entry.domain.is_empty() && !entry.key.starts_with("hash:") {
            let t = self.domains.entry(entry.domain.clone()).or_default();
            t.counts[entry.label.index()] += 1;
            t.keys.insert(entry.key.clone());
        }
        self.bytes += size;
        self.lru.insert(tick, entry.key.clone());
        let slot = Slot {
            size,
            tick: AtomicU64::new(tick),
            last_used: AtomicI64::new(entry.last_used),
            lru_tick: tick,
            entry,
        };
        self.slots.insert(slot.entry.key.clone(), slot);
    }

    fn remove(&mut self, key: &str) -> Option<Slot> {
        let slot = self.slots.remove(key)?;
        self.lru.remove(&slot.lru_tick);
        self.bytes -= slot.size;
        if let Some(t) = self.domains.get_mut(&slot.entry.domain) {
            if t.keys.remove(key) {
                t.counts[slot.entry.label.index()] -= 1;
                if t.keys.is_empty() {
                    self.domains.remove(&slot.entry.domain);
                }
            }
        }
        Some(slot)
    }

    fn fold_touches(&mut self, keys: Vec<String>) {
        for key in keys {
            let Some(slot) = self.slots.get_mut(&key) else {
                continue;
            };
            let tick = slot.tick.load(Ordering::Relaxed);
            if tick != slot.lru_tick {
                self.lru.remove(&slot.lru_tick);
                self.lru.insert(tick, key);
                slot.lru_tick = tick;
            }
        }
    }

    fn evict_to(&mut self, capacity: u64) -> Vec<String> {
        let mut evicted = Vec::new();
        while self.bytes > capacity {
            let Some((_, key)) = self.lru.first_key_value() else {
                break;
            };
            let key = key.clone();
            self.remove(&key);
            evicted.push(key);
        }
        evicted
    }

    /// Live entries in LRU order, oldest first.
    fn entries_lru(&self) -> impl Iterator<Item = LabelEntry> + '_ {
        self.lru.values().map(|k| self.slots[k].snapshot())
    }

    fn maybe_compact(&mut self) -> Result<()> {
        let live = self.bytes;
        let Some(log) = self.log.as_ref() else {
            return Ok(());
        };
        if log.bytes <= 2 * live + (1 << 16) {
            return Ok(());
        }
        let entries: Vec<LabelEntry> = self.entries_lru().collect();
        self.log.as_mut().unwrap().rewrite(entries.iter())
    }
}

/// Persistent script-key → label store with LRU eviction.
pub struct LabelStore {
    capacity: u64,
    inner: RwLock<Inner>,
    clock: AtomicU64,
    touches: Mutex<Vec<String>>,
}

impl std::fmt::Debug for LabelStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LabelStore")
            .field("capacity", &self.capacity)
            .field("entries", &self.len())
            .field("bytes", &self.bytes_used())
            .finish()
    }
}

impl LabelStore {
    /// An empty store with the given capacity, held in memory.
    pub fn in_memory(capacity_bytes: u64) -> Result<LabelStore> {
        Self::open(StoreConfig {
            capacity_bytes,
            path: None,
        })
    }

    /// Open or create a store. A persisted store is replayed from its log,
    /// trimmed to the (possibly smaller) configured capacity and compacted.
    pub fn open(cfg: StoreConfig) -> Result<LabelStore> {
        if cfg.capacity_bytes == 0 {
            return Err(Error::InvalidConfig(
                "capacity_bytes must be positive".into(),
            ));
        }
        let mut inner = Inner::default();
        let mut tick = 0;
        if let Some(path) = &cfg.path {
            let (log, records) = Log::open(path)?;
            // replay, then order by persisted recency (log order breaks ties)
            let mut live: HashMap<String, (LabelEntry, u64)> = HashMap::new();
            for (seq, r) in records.into_iter().enumerate() {
                match r {
                    Record::Put { entry } => {
                        live.insert(entry.key.clone(), (entry, seq as u64));
                    }
                    Record::Del { key } => {
                        live.remove(&key);
                    }
                }
            }
            let mut live: Vec<_> = live.into_values().collect();
            live.sort_by_key(|(e, seq)| (e.last_used, *seq));
            for (entry, _) in live {
                if entry.validate().is_ok() && entry.accounted_size() <= cfg.capacity_bytes {
                    inner.insert(entry, tick);
                    tick += 1;
                }
            }
            inner.evict_to(cfg.capacity_bytes);
            inner.log = Some(log);
            let entries: Vec<LabelEntry> = inner.entries_lru().collect();
            inner.log.as_mut().unwrap().rewrite(entries.iter())?;
        }
        Ok(LabelStore {
            capacity: cfg.capacity_bytes,
            inner: RwLock::new(inner),
            clock: AtomicU64::new(tick),
            touches: Mutex::new(Vec::new()),
        })
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity
    }

    /// Accounted bytes of all live entries.
    pub fn bytes_used(&self) -> u64 {
        self.inner.read().bytes
    }

    pub fn len(&self) -> usize {
        self.inner.read().slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn next_tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::Relaxed)
    }

    fn write(&self) -> parking_lot::RwLockWriteGuard<'_, Inner> {
        let mut inner = self.inner.write();
        let pending = std::mem::take(&mut *self.touches.lock());
        inner.fold_touches(pending);
        inner
    }

    /// Insert or replace `entry`, stamping it as most recently used, then
    /// evict least-recently-used entries until the store fits its capacity.
    /// Returns the evicted keys, oldest first.
    pub fn put(&self, mut entry: LabelEntry) -> Result<Vec<String>> {
        entry.validate()?;
        let size = entry.accounted_size();
        if size > self.capacity {
            return Err(Error::Store(format!(
                "{}: entry of {size} bytes exceeds capacity {}",
                entry.key, self.capacity
            )));
        }
        entry.last_used = crate::unix_now();
        let mut inner = self.write();
        if let Some(log) = inner.log.as_mut() {
            log.append(&Record::Put {
                entry: entry.clone(),
            })?;
        }
        let tick = self.next_tick();
        inner.insert(entry, tick);
        let evicted = inner.evict_to(self.capacity);
        if let Some(log) = inner.log.as_mut() {
            for key in &evicted {
                log.append(&Record::Del { key: key.clone() })?;
            }
        }
        inner.maybe_compact()?;
        Ok(evicted)
    }

    /// Look up `key`, refreshing its recency on an exact hit. On a miss,
    /// a URL key falls back to host consensus: when every stored label for
    /// the URL's host agrees, an inferred entry with that label is returned
    /// (confidence = the minimum, labeled_at = the newest of those labels).
    pub fn get(&self, key: &str) -> Option<Lookup> {
        let inner = self.inner.read();
        if let Some(slot) = inner.slots.get(key) {
            slot.tick.store(self.next_tick(), Ordering::Relaxed);
            slot.last_used.store(crate::unix_now(), Ordering::Relaxed);
            let entry = slot.snapshot();
            let mut touches = self.touches.lock();
            touches.push(key.to_string());
            let full = touches.len() >= MAX_PENDING_TOUCHES;
            drop(touches);
            drop(inner);
            if full {
                drop(self.write());
            }
            return Some(Lookup {
                entry,
                inferred: false,
            });
        }
        Self::consensus(&inner, key)
    }

    fn consensus(inner: &Inner, key: &str) -> Option<Lookup> {
        if key.starts_with("hash:") {
            return None;
        }
        let host = host_of(&Url::parse(key).ok()?)?;
        let tally = inner.domains.get(&host)?;
        let mut agreed = tally.counts.iter().enumerate().filter(|(_, &n)| n > 0);
        let (label_idx, _) = agreed.next()?;
        if agreed.next().is_some() {
            return None;
        }
        let label = Category::from_index(label_idx).map_or(Label::Unassigned, Label::Assigned);
        let mut confidence = f64::INFINITY;
        let mut labeled_at = 0;
        for k in &tally.keys {
            let e = &inner.slots[k].entry;
            confidence = confidence.min(e.confidence);
            labeled_at = labeled_at.max(e.labeled_at);
        }
        Some(Lookup {
            entry: LabelEntry {
                last_used: crate::unix_now(),
                ..LabelEntry::new(key, host, label, confidence, labeled_at)
            },
            inferred: true,
        })
    }

    /// Exact lookup without touching recency.
    pub fn peek(&self, key: &str) -> Option<LabelEntry> {
        self.inner.read().slots.get(key).map(Slot::snapshot)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.inner.read().slots.contains_key(key)
    }

    /// Keys in LRU order, least recently used first.
    pub fn lru_order(&self) -> Vec<String> {
        self.write().lru.values().cloned().collect()
    }

    /// Entries labeled strictly after `ts`, sorted by `(labeled_at, key)`,
    /// taken from one consistent view of the store.
    pub fn snapshot_since(&self, ts: i64) -> Vec<LabelEntry> {
        let mut out: Vec<LabelEntry> = {
            let inner = self.inner.read();
            inner
                .slots
                .values()
                .filter(|s| s.entry.labeled_at > ts)
                .map(Slot::snapshot)
                .collect()
        };
        out.sort_by(|a, b| {
            a.labeled_at
                .cmp(&b.labeled_at)
                .then_with(|| a.key.cmp(&b.key))
        });
        out
    }

    /// Write every entry as a JSONL snapshot (atomically, via rename).
    /// Returns the number of lines written.
    pub fn export_jsonl(&self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let entries = self.snapshot_since(i64::MIN);
        let tmp = path.with_extension("jsonl.tmp");
        {
            let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            let mut w = BufWriter::new(f);
            write_snapshot(&mut w, &entries).map_err(|e| Error::io(&tmp, e))?;
            w.flush().map_err(|e| Error::io(&tmp, e))?;
        }
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        Ok(entries.len())
    }

    /// Put every valid line of a JSONL snapshot. Malformed or invalid lines
    /// are skipped and counted; blank lines are ignored.
    pub fn import_jsonl(&self, path: impl AsRef<Path>) -> Result<ImportReport> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        self.import_reader(BufReader::new(f), path)
    }

    pub fn import_reader(&self, reader: impl BufRead, origin: &Path) -> Result<ImportReport> {
        let mut report = ImportReport::default();
        for (i, line) in reader.split(b'\n').enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let text = String::from_utf8_lossy(&line);
            if text.trim().is_empty() {
                continue;
            }
            match LabelEntry::from_snapshot_line(text.trim_end_matches('\r')) {
                Ok(entry) => match self.put(entry) {
                    Ok(_) => report.imported += 1,
                    Err(e @ Error::Io { .. }) => return Err(e),
                    Err(e) => {
                        tracing::warn!(origin = %origin.display(), line = i + 1, error = %e, "skipping label");
                        report.skipped += 1;
                    }
                },
                Err(e) => {
                    tracing::warn!(origin = %origin.display(), line = i + 1, error = %e, "skipping malformed label line");
                    report.skipped += 1;
                }
            }
        }
        Ok(report)
    }

    /// Persist recency and compact the log; a no-op for in-memory stores.
    pub fn flush(&self) -> Result<()> {
        let mut inner = self.write();
        let entries: Vec<LabelEntry> = inner.entries_lru().collect();
        match inner.log.as_mut() {
            Some(log) => {
                log.rewrite(entries.iter())?;
                log.sync()
            }
            None => Ok(()),
        }
    }
}

impl Drop for LabelStore {
    fn drop(&mut self) {
        if let Err(e) = self.flush() {
            tracing::warn!(error = %e, "failed to flush label store");
        }
    }
}

impl LabelSource for LabelStore {
    fn lookup(&self, key: &str) -> Result<Option<Lookup>> {
        Ok(self.get(key))
    }
}

/// Write entries as JSONL snapshot lines.
pub fn write_snapshot(w: &mut impl Write, entries: &[LabelEntry]) -> std::io::Result<()> {
    for e in entries {
        w.write_all(e.to_snapshot_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a JSONL snapshot; returns the valid entries and the number of
/// skipped lines.
pub fn parse_snapshot(text: &str) -> (Vec<LabelEntry>, usize) {
    let mut entries = Vec::new();
    let mut skipped = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match LabelEntry::from_snapshot_line(line) {
            Ok(e) => entries.push(e),
            Err(_) => skipped += 1,
        }
    }
    (entries, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Category::*;

    fn entry(key: &str, domain: &str, label: impl Into<Label>, ts: i64) -> LabelEntry {
        LabelEntry::new(key, domain, label.into(), 0.9, ts)
    }

    #[test]
    fn put_get_replace() {
        let s = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        assert!(s.get("https://a.com/x.js").is_none());
        s.put(entry("https://a.com/x.js", "a.com", Analytics, 5))
            .unwrap();
        let hit = s.get("https://a.com/x.js").unwrap();
        assert!(!hit.inferred);
        assert_eq!(hit.entry.label, Label::Assigned(Analytics));
        s.put(entry("https://a.com/x.js", "a.com", Video, 6))
            .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s.get("https://a.com/x.js").unwrap().entry.label,
            Label::Assigned(Video)
        );
        assert_eq!(
            s.bytes_used(),
            entry("https://a.com/x.js", "a.com", Video, 6).accounted_size()
        );
    }

    #[test]
    fn domain_consensus() {
        let s = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        for (i, c) in [0.9, 0.7, 0.8].into_iter().enumerate() {
            let mut e = entry(
                &format!("https://t.com/{i}.js"),
                "t.com",
                Analytics,
                10 + i as i64,
            );
            e.confidence = c;
            s.put(e).unwrap();
        }
        let l = s.get("https://t.com/new.js").unwrap();
        assert!(l.inferred);
        assert_eq!(l.entry.label, Label::Assigned(Analytics));
        assert_eq!(l.entry.confidence, 0.7);
        assert_eq!(l.entry.labeled_at, 12);
        assert_eq!(l.entry.domain, "t.com");
        assert!(!s.contains("https://t.com/new.js"));
        // other hosts, including subdomains, do not inherit
        assert!(s.get("https://cdn.t.com/a.js").is_none());
        assert!(s.get("hash:abc").is_none());

        s.put(entry("https://t.com/3.js", "t.com", Social, 13))
            .unwrap();
        assert!(s.get("https://t.com/new.js").is_none());
        // replacing the disagreeing label restores consensus
        s.put(entry("https://t.com/3.js", "t.com", Analytics, 14))
            .unwrap();
        assert!(s.get("https://t.com/new.js").unwrap().inferred);
    }

    #[test]
    fn inline_keys_never_vote() {
        let s = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        s.put(entry("hash:00", "t.com", Analytics, 1)).unwrap();
        assert!(s.get("https://t.com/a.js").is_none());
    }

    #[test]
    fn lru_eviction_respects_reads() {
        let a = entry("https://a.com/1.js", "a.com", Video, 1);
        let size = a.accounted_size();
        let s = LabelStore::in_memory(3 * size).unwrap();
        s.put(a).unwrap();
        s.put(entry("https://a.com/2.js", "a.com", Video, 1))
            .unwrap();
        s.put(entry("https://a.com/3.js", "a.com", Video, 1))
            .unwrap();
        s.get("https://a.com/1.js").unwrap();
        let evicted = s
            .put(entry("https://a.com/4.js", "a.com", Video, 1))
            .unwrap();
        assert_eq!(evicted, ["https://a.com/2.js"]);
        assert_eq!(
            s.lru_order(),
            [
                "https://a.com/3.js",
                "https://a.com/1.js",
                "https://a.com/4.js"
            ]
        );
        assert!(s.bytes_used() <= 3 * size);
    }

    #[test]
    fn oversized_and_invalid_entries_rejected() {
        let s = LabelStore::in_memory(10).unwrap();
        assert!(s
            .put(entry("https://a.com/1.js", "a.com", Video, 1))
            .is_err());
        assert!(s.is_empty());
        assert!(LabelStore::in_memory(0).is_err());
        let s = LabelStore::in_memory(1000).unwrap();
        assert!(s.put(entry("", "a.com", Video, 1)).is_err());
    }

    #[test]
    fn snapshot_since_filters_and_sorts() {
        let s = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        for (k, ts) in [
            ("https://b.com/b", 30),
            ("https://a.com/a", 10),
            ("https://c.com/c", 20),
            ("https://d.com/d", 30),
        ] {
            s.put(entry(k, "", Content, ts)).unwrap();
        }
        let ks = |ts| {
            s.snapshot_since(ts)
                .into_iter()
                .map(|e| e.key)
                .collect::<Vec<_>>()
        };
        assert_eq!(
            ks(0),
            [
                "https://a.com/a",
                "https://c.com/c",
                "https://b.com/b",
                "https://d.com/d"
            ]
        );
        assert_eq!(
            ks(10),
            ["https://c.com/c", "https://b.com/b", "https://d.com/d"]
        );
        assert!(ks(30).is_empty());
    }

    #[test]
    fn persistence_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.log");
        let cfg = StoreConfig {
            capacity_bytes: DEFAULT_CAPACITY_BYTES,
            path: Some(path.clone()),
        };
        {
            let s = LabelStore::open(cfg.clone()).unwrap();
            s.put(entry("https://a.com/1.js", "a.com", Video, 1))
                .unwrap();
            s.put(entry("https://a.com/2.js", "a.com", Social, 2))
                .unwrap();
            s.put(entry("https://a.com/1.js", "a.com", Hosting, 3))
                .unwrap();
        }
        // a torn trailing record is ignored
        std::fs::OpenOptions::new()
            .append(true)
            .open(&path)
            .unwrap()
            .write_all(b"{\"op\":\"put\",\"entry\":{\"key\"")
            .unwrap();
        let s = LabelStore::open(cfg).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(
            s.peek("https://a.com/1.js").unwrap().label,
            Label::Assigned(Hosting)
        );
        assert_eq!(
            s.peek("https://a.com/2.js").unwrap().label,
            Label::Assigned(Social)
        );
    }

    #[test]
    fn reopen_with_smaller_capacity_evicts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.log");
        let e = entry("https://a.com/1.js", "a.com", Video, 1);
        let size = e.accounted_size();
        {
            let s = LabelStore::open(StoreConfig {
                capacity_bytes: DEFAULT_CAPACITY_BYTES,
                path: Some(path.clone()),
            })
            .unwrap();
            for i in 1..=4 {
                s.put(entry(&format!("https://a.com/{i}.js"), "a.com", Video, 1))
                    .unwrap();
            }
        }
        let s = LabelStore::open(StoreConfig {
            capacity_bytes: 2 * size,
            path: Some(path),
        })
        .unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.bytes_used() <= 2 * size);
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        for i in 0..10 {
            let label = if i % 3 == 0 {
                Label::Unassigned
            } else {
                Category::ALL[i % 8].into()
            };
            s.put(LabelEntry::new(
                format!("https://h{i}.com/s.js"),
                format!("h{i}.com"),
                label,
                i as f64 / 10.0,
                i as i64,
            ))
            .unwrap();
        }
        let path = dir.path().join("snap.jsonl");
        assert_eq!(s.export_jsonl(&path).unwrap(), 10);
        let t = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        assert_eq!(
            t.import_jsonl(&path).unwrap(),
            ImportReport {
                imported: 10,
                skipped: 0
            }
        );
        let strip = |v: Vec<LabelEntry>| {
            v.into_iter()
                .map(|e| LabelEntry { last_used: 0, ..e })
                .collect::<Vec<_>>()
        };
        assert_eq!(
            strip(t.snapshot_since(i64::MIN)),
            strip(s.snapshot_since(i64::MIN))
        );
    }

    #[test]
    fn import_counts_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.jsonl");
        let mut text = String::new();
        for i in 0..9 {
            text.push_str(
                &entry(&format!("https://a.com/{i}"), "a.com", Utility, 1).to_snapshot_line(),
            );
            text.push('\n');
            if i == 4 {
                text.push_str("{not json\n");
            }
        }
        std::fs::write(&path, text).unwrap();
        let s = LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap();
        assert_eq!(
            s.import_jsonl(&path).unwrap(),
            ImportReport {
                imported: 9,
                skipped: 1
            }
        );

        std::fs::write(&path, "").unwrap();
        assert_eq!(s.import_jsonl(&path).unwrap(), ImportReport::default());
        assert!(s.import_jsonl(dir.path().join("missing")).is_err());
    }

    #[test]
    fn concurrent_readers_and_writer() {
        let s = std::sync::Arc::new(LabelStore::in_memory(40_000).unwrap());
        std::thread::scope(|scope| {
            for t in 0..4 {
                let s = s.clone();
                scope.spawn(move || {
                    for i in 0..2000 {
                        let _ = s.get(&format!("https://a.com/{}.js", (i * 7 + t) % 500));
                    }
                });
            }
            let s = s.clone();
            scope.spawn(move || {
                for i in 0..2000 {
                    s.put(entry(
                        &format!("https://a.com/{}.js", i % 500),
                        "a.com",
                        Video,
                        1,
                    ))
                    .unwrap();
                    assert!(s.bytes_used() <= 40_000);
                }
            });
        });
        let inner = s.inner.read();
        assert_eq!(inner.lru.len(), inner.slots.len());
        assert_eq!(
            inner.bytes,
            inner.slots.values().map(|s| s.size).sum::<u64>()
        );
    }
}
