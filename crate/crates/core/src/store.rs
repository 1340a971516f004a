//! File-backed document store for capture records and their screenshots.
//!
//! Layout under the data directory:
//!
//! ```text
//! records/<capture_id>.json   one UTF-8 JSON document per record
//! images/<capture_id>.png     the screenshot exactly as captured
//! ```
//!
//! Every write goes to a temp file that is fsynced and renamed into place,
//! so a crash leaves either the old or the new document. The in-memory
//! index is rebuilt from `records/` on open.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{image_ref_for, is_safe_id, CaptureRecord, ModelError};

const RECORDS_DIR: &str = "records";
const IMAGES_DIR: &str = "images";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("capture {0:?} not found")]
    NotFound(String),
    #[error("capture {0:?} already exists")]
    Collision(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid record: {0}")]
    InvalidRecord(#[from] ModelError),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl StoreError {
    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> StoreError {
        let context = context.into();
        move |source| StoreError::Io { context, source }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortSpec {
    #[default]
    LikedFirstThenRecent,
    RecentOnly,
}

/// Keyword query: lowercase, whitespace-separated tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchQuery {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl SearchQuery {
    pub fn parse(raw: &str) -> Self {
        SearchQuery {
            raw: raw.to_owned(),
            tokens: raw.split_whitespace().map(str::to_lowercase).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True when any token is a case-insensitive substring of any searchable
    /// field: resource window title, app name and locator value, the capture
    /// date, the record title and description.
    pub fn matches(&self, record: &CaptureRecord) -> bool {
        if self.tokens.is_empty() {
            return true;
        }
        let mut fields: Vec<String> = Vec::with_capacity(3 + record.resources.len() * 3);
        fields.push(record.title.to_lowercase());
        fields.push(record.description.to_lowercase());
        fields.push(record.date_key());
        for r in &record.resources {
            fields.push(r.window_title.to_lowercase());
            fields.push(r.app_name.to_lowercase());
            if let Some(loc) = &r.locator {
                fields.push(loc.value.to_lowercase());
            }
        }
        self.tokens
            .iter()
            .any(|t| fields.iter().any(|f| f.contains(t.as_str())))
    }
}

/// Collection ordering. Liked records first (for the default spec), then
/// newest first, then capture id descending.
pub fn compare_records(a: &CaptureRecord, b: &CaptureRecord, sort: SortSpec) -> Ordering {
    let liked = match sort {
        SortSpec::LikedFirstThenRecent => b.liked.cmp(&a.liked),
        SortSpec::RecentOnly => Ordering::Equal,
    };
    liked
        .then_with(|| b.created_at.cmp(&a.created_at))
        .then_with(|| b.capture_id.cmp(&a.capture_id))
}

pub fn sort_records(records: &mut [CaptureRecord], sort: SortSpec) {
    records.sort_by(|a, b| compare_records(a, b, sort));
}

/// Partial update of user-editable fields.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldUpdate {
    pub title: Option<String>,
    pub description: Option<String>,
    pub liked: Option<bool>,
}

/// Checks that `bytes` is a complete, decodable PNG. Returns its size.
pub fn validate_png(bytes: &[u8]) -> Result<(u32, u32)> {
    if bytes.is_empty() {
        return Err(StoreError::InvalidImage("empty image".into()));
    }
    let mut decoder = png::Decoder::new(io::Cursor::new(bytes));
    // Bound allocations for untrusted input.
    decoder.set_limits(png::Limits {
        bytes: 256 * 1024 * 1024,
    });
    let mut reader = decoder
        .read_info()
        .map_err(|e| StoreError::InvalidImage(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| StoreError::InvalidImage("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| StoreError::InvalidImage(e.to_string()))?;
    Ok((info.width, info.height))
}

pub struct Store {
    root: PathBuf,
    index: RwLock<HashMap<String, CaptureRecord>>,
    writer: Mutex<()>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("root", &self.root)
            .field("len", &self.len())
            .finish()
    }
}

impl Store {
    /// Opens (creating if needed) the store rooted at `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        for sub in [RECORDS_DIR, IMAGES_DIR] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(StoreError::io(format!("creating {}", dir.display())))?;
        }
        let mut index = HashMap::new();
        let dir = root.join(RECORDS_DIR);
        for entry in fs::read_dir(&dir).map_err(StoreError::io(format!("scanning {}", dir.display())))? {
            let path = entry.map_err(StoreError::io("scanning records"))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let bytes = fs::read(&path).map_err(StoreError::io(format!("reading {}", path.display())))?;
            match CaptureRecord::from_json_slice(&bytes) {
                Ok(rec) if path.file_stem().and_then(|s| s.to_str()) == Some(&rec.capture_id) => {
                    index.insert(rec.capture_id.clone(), rec);
                }
                Ok(rec) => log::warn!(
                    "skipping {}: holds capture {:?}",
                    path.display(),
                    rec.capture_id
                ),
                Err(e) => log::warn!("skipping unreadable record {}: {e}", path.display()),
            }
        }
        log::debug!("opened store at {} with {} records", root.display(), index.len());
        Ok(Store {
            root,
            index: RwLock::new(index),
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.read_index().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, capture_id: &str) -> bool {
        self.read_index().contains_key(capture_id)
    }

    /// Persists a new record and its screenshot.
    pub fn save(&self, record: &CaptureRecord, image_png: &[u8]) -> Result<String> {
        record.validate()?;
        let expected_ref = image_ref_for(&record.capture_id);
        if record.image_ref != expected_ref {
            return Err(StoreError::InvalidRecord(ModelError::InvalidInput(format!(
                "image_ref must be {expected_ref:?}, got {:?}",
                record.image_ref
            ))));
        }
        validate_png(image_png)?;

        let _guard = self.lock_writer();
        if self.contains(&record.capture_id) || self.record_path(&record.capture_id).exists() {
            return Err(StoreError::Collision(record.capture_id.clone()));
        }
        atomic_write(&self.root.join(&record.image_ref), image_png)?;
        self.write_record(record)?;
        self.write_index()
            .insert(record.capture_id.clone(), record.clone());
        Ok(record.capture_id.clone())
    }

    pub fn get(&self, capture_id: &str) -> Result<CaptureRecord> {
        self.read_index()
            .get(capture_id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(capture_id.to_owned()))
    }

    pub fn list_sorted(&self, sort: SortSpec) -> Vec<CaptureRecord> {
        let mut all: Vec<CaptureRecord> = self.read_index().values().cloned().collect();
        sort_records(&mut all, sort);
        all
    }

    pub fn search(&self, query: &SearchQuery, sort: SortSpec) -> Vec<CaptureRecord> {
        let mut hits: Vec<CaptureRecord> = self
            .read_index()
            .values()
            .filter(|r| query.matches(r))
            .cloned()
            .collect();
        sort_records(&mut hits, sort);
        hits
    }

    /// Changes only the provided fields. `created_at`, the id and the
    /// resource list are never touched.
    pub fn update_fields(&self, capture_id: &str, update: &FieldUpdate) -> Result<CaptureRecord> {
        if let Some(t) = &update.title {
            if t.trim().is_empty() {
                return Err(StoreError::InvalidEdit("title must not be empty".into()));
            }
        }
        let _guard = self.lock_writer();
        let mut rec = self.get(capture_id)?;
        let before = rec.clone();
        if let Some(t) = &update.title {
            rec.title = t.clone();
        }
        if let Some(d) = &update.description {
            rec.description = d.clone();
        }
        if let Some(l) = update.liked {
            rec.liked = l;
        }
        if rec != before {
            self.write_record(&rec)?;
            self.write_index().insert(rec.capture_id.clone(), rec.clone());
        }
        Ok(rec)
    }

    pub fn delete(&self, capture_id: &str) -> Result<()> {
        let _guard = self.lock_writer();
        let rec = self.get(capture_id)?;
        let path = self.record_path(capture_id);
        fs::remove_file(&path).map_err(StoreError::io(format!("removing {}", path.display())))?;
        self.write_index().remove(capture_id);
        let image = self.root.join(&rec.image_ref);
        match fs::remove_file(&image) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => log::warn!("record {capture_id} deleted but image removal failed: {e}"),
        }
        Ok(())
    }

    pub fn image_path(&self, capture_id: &str) -> Result<PathBuf> {
        let rec = self.get(capture_id)?;
        Ok(self.root.join(rec.image_ref))
    }

    pub fn read_image(&self, capture_id: &str) -> Result<Vec<u8>> {
        let path = self.image_path(capture_id)?;
        fs::read(&path).map_err(StoreError::io(format!("reading {}", path.display())))
    }

    fn record_path(&self, capture_id: &str) -> PathBuf {
        debug_assert!(is_safe_id(capture_id));
        self.root.join(RECORDS_DIR).join(format!("{capture_id}.json"))
    }

    fn write_record(&self, record: &CaptureRecord) -> Result<()> {
        let mut doc = serde_json::to_vec_pretty(record).expect("records always serialize");
        doc.push(b'\n');
        atomic_write(&self.record_path(&record.capture_id), &doc)
    }

    fn read_index(&self) -> std::sync::RwLockReadGuard<'_, HashMap<String, CaptureRecord>> {
        self.index.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_index(&self) -> std::sync::RwLockWriteGuard<'_, HashMap<String, CaptureRecord>> {
        self.index.write().unwrap_or_else(|e| e.into_inner())
    }

    fn lock_writer(&self) -> std::sync::MutexGuard<'_, ()> {
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// temp file -> write -> fsync -> rename
fn atomic_write(path: &Path, data: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = File::create(&tmp).map_err(StoreError::io(format!("creating {}", tmp.display())))?;
    file.write_all(data)
        .and_then(|()| file.sync_all())
        .map_err(StoreError::io(format!("writing {}", tmp.display())))?;
    drop(file);
    fs::rename(&tmp, path).map_err(StoreError::io(format!("renaming into {}", path.display())))
}
