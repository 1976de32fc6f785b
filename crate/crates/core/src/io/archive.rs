//! File-backed scenario archive.
//!
//! One JSON document per portfolio id under the archive root. Writes go to a
//! temp file in the same directory, are synced, then renamed over the target,
//! so readers see either the old or the new document. Each document carries a
//! version counter; a write must name the version it was based on.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Portfolio;
use crate::validate::{validate_portfolio, RawPortfolio, ValidationError};

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("portfolio {0:?} not found")]
    NotFound(String),
    #[error("storage full")]
    StorageFull,
    #[error("concurrent write conflict on {id:?}: expected version {expected:?}, stored version {actual:?}")]
    ConcurrentWriteConflict {
        id: String,
        expected: Option<u64>,
        actual: Option<u64>,
    },
    #[error("invalid portfolio id {0:?}")]
    InvalidId(String),
    #[error("stored document {id:?} is unreadable: {message}")]
    Corrupt { id: String, message: String },
    #[error("archive root {0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("io error: {0}")]
    Io(io::Error),
}

impl ArchiveError {
    pub fn code(&self) -> &'static str {
        match self {
            ArchiveError::NotFound(_) => "NotFound",
            ArchiveError::StorageFull => "StorageFull",
            ArchiveError::ConcurrentWriteConflict { .. } => "ConcurrentWriteConflict",
            ArchiveError::InvalidId(_) => "InvalidId",
            ArchiveError::Corrupt { .. } => "Corrupt",
            ArchiveError::NotADirectory(_) => "NotADirectory",
            ArchiveError::Io(_) => "IoError",
        }
    }
}

impl From<io::Error> for ArchiveError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::StorageFull {
            ArchiveError::StorageFull
        } else {
            ArchiveError::Io(e)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    id: String,
    version: u64,
    portfolio: RawPortfolio,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredPortfolio {
    pub id: String,
    pub version: u64,
    pub portfolio: Portfolio,
}

/// Percent-escapes everything except ASCII alphanumerics, `-` and `_`.
pub fn escape_id(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'-' || b == b'_' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn unescape_id(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = name.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug)]
pub struct ScenarioArchive {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ScenarioArchive {
    /// Opens an existing directory; the archive never creates its root.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ArchiveError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(ArchiveError::NotADirectory(root));
        }
        Ok(ScenarioArchive {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, id: &str) -> Result<PathBuf, ArchiveError> {
        if id.trim().is_empty() || id.len() > 200 {
            return Err(ArchiveError::InvalidId(id.to_string()));
        }
        Ok(self.root.join(format!("{}.json", escape_id(id))))
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    fn read_document(&self, id: &str) -> Result<Option<Document>, ArchiveError> {
        let path = self.path_for(id)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| ArchiveError::Corrupt {
                id: id.to_string(),
                message: e.to_string(),
            })
    }

    /// The stored canonical document text.
    pub fn document(&self, id: &str) -> Result<String, ArchiveError> {
        let path = self.path_for(id)?;
        fs::read_to_string(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                ArchiveError::NotFound(id.to_string())
            } else {
                e.into()
            }
        })
    }

    pub fn load(&self, id: &str) -> Result<StoredPortfolio, ArchiveError> {
        let doc = self
            .read_document(id)?
            .ok_or_else(|| ArchiveError::NotFound(id.to_string()))?;
        let portfolio = validate_portfolio(&doc.portfolio).map_err(|errors| corrupt(id, &errors))?;
        Ok(StoredPortfolio {
            id: doc.id,
            version: doc.version,
            portfolio,
        })
    }

    pub fn version(&self, id: &str) -> Result<Option<u64>, ArchiveError> {
        Ok(self.read_document(id)?.map(|d| d.version))
    }

    /// Writes `portfolio` under its own id.
    ///
    /// `expected_version` is `None` to create a new document, or the version
    /// the caller last read. Any other stored state is a conflict. Returns the
    /// new version.
    pub fn save(
        &self,
        portfolio: &Portfolio,
        expected_version: Option<u64>,
    ) -> Result<u64, ArchiveError> {
        let id = portfolio.id().to_string();
        let path = self.path_for(&id)?;
        let lock = self.lock_for(&id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());

        let actual = self.read_document(&id)?.map(|d| d.version);
        if actual != expected_version {
            return Err(ArchiveError::ConcurrentWriteConflict {
                id,
                expected: expected_version,
                actual,
            });
        }
        let version = actual.map_or(1, |v| v + 1);
        let doc = Document {
            id: id.clone(),
            version,
            portfolio: portfolio.to_raw(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
        text.push('\n');
        self.write_atomic(&path, text.as_bytes())?;
        Ok(version)
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), ArchiveError> {
        let file_name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("document");
        let temp = self.root.join(format!(
            ".{file_name}.tmp-{}-{}",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let result = (|| {
            let mut f = fs::File::create(&temp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&temp, path)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&temp);
        }
        result.map_err(Into::into)
    }

    /// Removes a document; `expected_version` must match when given.
    pub fn delete(&self, id: &str, expected_version: Option<u64>) -> Result<(), ArchiveError> {
        let path = self.path_for(id)?;
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let actual = self
            .read_document(id)?
            .ok_or_else(|| ArchiveError::NotFound(id.to_string()))?
            .version;
        if let Some(expected) = expected_version {
            if expected != actual {
                return Err(ArchiveError::ConcurrentWriteConflict {
                    id: id.to_string(),
                    expected: Some(expected),
                    actual: Some(actual),
                });
            }
        }
        fs::remove_file(path)?;
        Ok(())
    }

    /// Stored ids in lexical order.
    pub fn list(&self) -> Result<Vec<String>, ArchiveError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') {
                continue;
            }
            if let Some(stem) = name.strip_suffix(".json") {
                if let Some(id) = unescape_id(stem) {
                    ids.push(id);
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

fn corrupt(id: &str, errors: &[ValidationError]) -> ArchiveError {
    ArchiveError::Corrupt {
        id: id.to_string(),
        message: errors
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    fn archive() -> (tempfile::TempDir, ScenarioArchive) {
        let dir = tempfile::tempdir().unwrap();
        let archive = ScenarioArchive::open(dir.path()).unwrap();
        (dir, archive)
    }

    #[test]
    fn save_then_load() {
        let (_dir, a) = archive();
        let p = demo::portfolio();
        assert_eq!(a.save(&p, None).unwrap(), 1);
        let stored = a.load("demo").unwrap();
        assert_eq!(stored.portfolio, p);
        assert_eq!(stored.version, 1);
    }

    #[test]
    fn reload_is_byte_identical() {
        let (_dir, a) = archive();
        a.save(&demo::portfolio(), None).unwrap();
        let first = a.document("demo").unwrap();
        let loaded = a.load("demo").unwrap();
        a.save(&loaded.portfolio, Some(1)).unwrap();
        let second = a.document("demo").unwrap();
        assert_eq!(first.replace("\"version\": 1", "\"version\": 2"), second);
    }

    #[test]
    fn missing_is_not_found() {
        let (_dir, a) = archive();
        assert!(matches!(a.load("missing"), Err(ArchiveError::NotFound(_))));
        assert!(matches!(a.delete("missing", None), Err(ArchiveError::NotFound(_))));
    }

    #[test]
    fn stale_version_conflicts() {
        let (_dir, a) = archive();
        let p = demo::portfolio();
        a.save(&p, None).unwrap();
        // two writers both read version 1
        let first = a.load("demo").unwrap();
        let second = a.load("demo").unwrap();
        assert_eq!(a.save(&first.portfolio, Some(first.version)).unwrap(), 2);
        assert!(matches!(
            a.save(&second.portfolio, Some(second.version)),
            Err(ArchiveError::ConcurrentWriteConflict {
                expected: Some(1),
                actual: Some(2),
                ..
            })
        ));
        // creating over an existing id is a conflict too
        assert!(matches!(
            a.save(&p, None),
            Err(ArchiveError::ConcurrentWriteConflict { .. })
        ));
    }

    #[test]
    fn listing_is_sorted_and_escaped() {
        let (dir, a) = archive();
        let p = demo::portfolio();
        for id in ["zeta", "alpha", "with space/slash", "../escape"] {
            a.save(&p.with_id(id), None).unwrap();
        }
        assert_eq!(
            a.list().unwrap(),
            vec!["../escape", "alpha", "with space/slash", "zeta"]
        );
        assert!(dir.path().join("%2E%2E%2Fescape.json").exists());
        a.delete("alpha", Some(1)).unwrap();
        assert_eq!(a.list().unwrap().len(), 3);
    }

    #[test]
    fn escape_roundtrip() {
        for id in ["demo", "a b", "ü-ß", "%41", "x.y"] {
            assert_eq!(unescape_id(&escape_id(id)).as_deref(), Some(id));
        }
    }

    #[test]
    fn root_must_exist() {
        assert!(matches!(
            ScenarioArchive::open("/nonexistent/painworth"),
            Err(ArchiveError::NotADirectory(_))
        ));
    }

    #[test]
    fn concurrent_writers_serialize() {
        let (_dir, a) = archive();
        let a = Arc::new(a);
        a.save(&demo::portfolio(), None).unwrap();
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let a = Arc::clone(&a);
                std::thread::spawn(move || a.save(&demo::portfolio(), Some(1)).is_ok())
            })
            .collect();
        let wins = handles.into_iter().filter(|_| true).map(|h| h.join().unwrap()).filter(|ok| *ok).count();
        assert_eq!(wins, 1);
        assert_eq!(a.load("demo").unwrap().version, 2);
    }
}
