//! Private append-only persistence for [`super::LabelStore`].
//!
//! One JSON record per line: `{"op":"put","entry":{...}}` or
//! `{"op":"del","key":"..."}`. Opening replays the log; compaction rewrites
//! it as one `put` per live entry via a temporary file and rename.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::entry::LabelEntry;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub(super) enum Record {
    Put { entry: LabelEntry },
    Del { key: String },
}

pub(super) struct Log {
    path: PathBuf,
    out: BufWriter<File>,
    /// Bytes currently in the log file.
    pub(super) bytes: u64,
}

fn open_append(path: &Path) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))
}

impl Log {
    /// Open (creating if needed) and return the records found. Lines that do
    /// not parse are skipped with a warning; a torn final line after a crash
    /// is the expected case.
    pub(super) fn open(path: &Path) -> Result<(Log, Vec<Record>)> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = open_append(path)?;
        let mut records = Vec::new();
        let mut bytes = 0u64;
        let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        for (i, line) in reader.split(b'\n').enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            bytes += line.len() as u64 + 1;
            if line.is_empty() {
                continue;
            }
            match serde_json::from_slice::<Record>(&line) {
                Ok(r) => records.push(r),
                Err(e) => {
                    tracing::warn!(path = %path.display(), line = i + 1, error = %e, "skipping corrupt store record")
                }
            }
        }
        Ok((
            Log {
                path: path.to_path_buf(),
                out: BufWriter::new(file),
                bytes,
            },
            records,
        ))
    }

    pub(super) fn append(&mut self, record: &Record) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.out
            .write_all(&line)
            .and_then(|()| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.bytes += line.len() as u64;
        Ok(())
    }

    /// Replace the log with one `put` per entry.
    pub(super) fn rewrite<'a>(
        &mut self,
        entries: impl Iterator<Item = &'a LabelEntry>,
    ) -> Result<()> {
        let tmp = self.path.with_extension("compact");
        let mut bytes = 0u64;
        {
            let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            let mut w = BufWriter::new(f);
            for entry in entries {
                let mut line = serde_json::to_vec(&Record::Put {
                    entry: entry.clone(),
                })?;
                line.push(b'\n');
                bytes += line.len() as u64;
                w.write_all(&line).map_err(|e| Error::io(&tmp, e))?;
            }
            let f = w
                .into_inner()
                .map_err(|e| Error::io(&tmp, e.into_error()))?;
            f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        }
        std::fs::rename(&tmp, &self.path).map_err(|e| Error::io(&self.path, e))?;
        self.out = BufWriter::new(open_append(&self.path)?);
        self.bytes = bytes;
        Ok(())
    }

    pub(super) fn sync(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        self.out
            .get_ref()
            .sync_data()
            .map_err(|e| Error::io(&self.path, e))
    }
}
