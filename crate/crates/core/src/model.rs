//! Capture records, draft construction, user edits and display formatting.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Local, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::visibility::{Bounded, Rect, VisibilityReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("invalid locator: {0}")]
    InvalidLocator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    WebPage,
    File,
    Application,
}

impl ResourceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResourceKind::WebPage => "web_page",
            ResourceKind::File => "file",
            ResourceKind::Application => "application",
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResourceKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "web_page" => Ok(ResourceKind::WebPage),
            "file" => Ok(ResourceKind::File),
            "application" => Ok(ResourceKind::Application),
            other => Err(ModelError::InvalidLocator(format!(
                "unknown resource kind {other:?}"
            ))),
        }
    }
}

/// Restorable handle of a resource: a URL, a file path or an application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceLocator {
    pub kind: ResourceKind,
    pub value: String,
}

impl ResourceLocator {
    pub fn new(kind: ResourceKind, value: impl Into<String>) -> Result<Self, ModelError> {
        let loc = ResourceLocator {
            kind,
            value: value.into(),
        };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.value.trim().is_empty() {
            return Err(ModelError::InvalidLocator(format!(
                "empty {} locator",
                self.kind
            )));
        }
        if self.kind == ResourceKind::WebPage {
            url::Url::parse(&self.value).map_err(|e| {
                ModelError::InvalidLocator(format!("{:?} is not a URL: {e}", self.value))
            })?;
        }
        Ok(())
    }
}

/// One on-screen window at capture time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSnapshot {
    pub window_id: String,
    pub app_name: String,
    pub window_title: String,
    pub bounds: Rect,
    /// 0 is frontmost.
    pub z_index: u32,
    pub locator: Option<ResourceLocator>,
}

impl Bounded for WindowSnapshot {
    fn bounds(&self) -> Rect {
        self.bounds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRecord {
    pub window_id: String,
    pub app_name: String,
    pub window_title: String,
    pub bounds: Rect,
    pub z_index: u32,
    pub visible: bool,
    pub selected: bool,
    pub locator: Option<ResourceLocator>,
}

impl ResourceRecord {
    pub fn from_snapshot(snap: &WindowSnapshot, visible: bool) -> Self {
        ResourceRecord {
            window_id: snap.window_id.clone(),
            app_name: snap.app_name.clone(),
            window_title: snap.window_title.clone(),
            bounds: snap.bounds,
            z_index: snap.z_index,
            visible,
            selected: visible,
            locator: snap.locator.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureMode {
    FullScreen,
    SelectedArea,
}

/// One screenshot bookmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRecord {
    pub capture_id: String,
    #[serde(with = "timestamp")]
    pub created_at: DateTime<Utc>,
    pub mode: CaptureMode,
    pub region: Rect,
    pub image_ref: String,
    pub title: String,
    pub description: String,
    pub liked: bool,
    pub resources: Vec<ResourceRecord>,
}

impl CaptureRecord {
    /// Checks the structural invariants a stored record must satisfy.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.capture_id.is_empty() {
            return Err(ModelError::InvalidInput("empty capture_id".into()));
        }
        if !is_safe_id(&self.capture_id) {
            return Err(ModelError::InvalidInput(format!(
                "capture_id {:?} has characters outside [A-Za-z0-9_-]",
                self.capture_id
            )));
        }
        if self.title.trim().is_empty() {
            return Err(ModelError::InvalidInput("empty title".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &self.resources {
            if !seen.insert(r.window_id.as_str()) {
                return Err(ModelError::InvalidInput(format!(
                    "duplicate window_id {:?}",
                    r.window_id
                )));
            }
            if let Some(loc) = &r.locator {
                loc.validate()?;
            }
        }
        Ok(())
    }

    pub fn resource(&self, window_id: &str) -> Option<&ResourceRecord> {
        self.resources.iter().find(|r| r.window_id == window_id)
    }

    pub fn selected_ids(&self) -> BTreeSet<String> {
        self.resources
            .iter()
            .filter(|r| r.selected)
            .map(|r| r.window_id.clone())
            .collect()
    }

    /// Capture date as `YYYY-MM-DD` (UTC), the form matched by keyword search.
    pub fn date_key(&self) -> String {
        self.created_at.format("%Y-%m-%d").to_string()
    }

    /// Decodes and validates a record document.
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, ModelError> {
        let rec: CaptureRecord = serde_json::from_slice(bytes)
            .map_err(|e| ModelError::InvalidInput(format!("record JSON: {e}")))?;
        rec.validate()?;
        Ok(rec)
    }
}

/// Identifiers end up in file names and URLs.
pub fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// Random 128-bit identifier rendered as 32 lowercase hex digits.
pub fn new_capture_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Stored image key for a capture.
pub fn image_ref_for(capture_id: &str) -> String {
    format!("images/{capture_id}.png")
}

/// Truncates to millisecond precision, the resolution records keep.
pub fn truncate_to_millis(t: DateTime<Utc>) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(t.timestamp_millis())
        .single()
        .expect("millisecond timestamp in range")
}

/// Default title for a capture taken at `at`, rendered in `tz`.
pub fn default_title<Tz: TimeZone>(at: DateTime<Utc>, tz: &Tz) -> String
where
    Tz::Offset: fmt::Display,
{
    at.with_timezone(tz).format("%Y-%m-%d %H:%M:%S").to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptureEdits {
    pub title: Option<String>,
    pub description: Option<String>,
    pub deselect_ids: BTreeSet<String>,
    pub add_invisible_ids: BTreeSet<String>,
}

impl CaptureEdits {
    pub fn is_empty(&self) -> bool {
        self.title.is_none()
            && self.description.is_none()
            && self.deselect_ids.is_empty()
            && self.add_invisible_ids.is_empty()
    }
}

/// Everything needed to turn an enumeration + visibility verdict into a draft.
#[derive(Debug, Clone)]
pub struct DraftInput<'a> {
    pub snapshots: &'a [WindowSnapshot],
    pub report: &'a VisibilityReport,
    pub mode: CaptureMode,
    pub region: Rect,
    pub now: DateTime<Utc>,
}

/// Builds a draft record. Every enumerated window becomes a resource, and
/// exactly the visible ones start out selected. The image reference and
/// title are derived from the fresh capture id and the capture time
/// (rendered in the local time zone).
pub fn new_capture_draft(input: &DraftInput<'_>) -> Result<CaptureRecord, ModelError> {
    new_capture_draft_in(input, new_capture_id(), &Local)
}

/// [`new_capture_draft`] with an explicit id and title time zone.
pub fn new_capture_draft_in<Tz: TimeZone>(
    input: &DraftInput<'_>,
    capture_id: String,
    tz: &Tz,
) -> Result<CaptureRecord, ModelError>
where
    Tz::Offset: fmt::Display,
{
    let n = input.snapshots.len();
    if let Some(bad) = input
        .report
        .visible_ids
        .iter()
        .chain(input.report.overlap_cells.keys())
        .find(|&&k| k >= n)
    {
        return Err(ModelError::InvalidInput(format!(
            "visibility report refers to window {bad} but only {n} were enumerated"
        )));
    }
    let created_at = truncate_to_millis(input.now);
    let resources = input
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, snap)| ResourceRecord::from_snapshot(snap, input.report.is_visible(k)))
        .collect();
    let record = CaptureRecord {
        image_ref: image_ref_for(&capture_id),
        capture_id,
        created_at,
        mode: input.mode,
        region: input.region,
        title: default_title(created_at, tz),
        description: String::new(),
        liked: false,
        resources,
    };
    record.validate()?;
    Ok(record)
}

/// Applies Capture View edits: selected = (visible \ deselect) ∪ added.
pub fn apply_user_edits(
    draft: &CaptureRecord,
    edits: &CaptureEdits,
) -> Result<CaptureRecord, ModelError> {
    for id in &edits.deselect_ids {
        match draft.resource(id) {
            None => return Err(ModelError::InvalidEdit(format!("unknown window {id:?}"))),
            Some(r) if !r.visible => {
                return Err(ModelError::InvalidEdit(format!(
                    "cannot deselect {id:?}: it was not visible"
                )))
            }
            Some(_) => {}
        }
    }
    for id in &edits.add_invisible_ids {
        match draft.resource(id) {
            None => return Err(ModelError::InvalidEdit(format!("unknown window {id:?}"))),
            Some(r) if r.visible => {
                return Err(ModelError::InvalidEdit(format!(
                    "cannot add {id:?}: it is already visible"
                )))
            }
            Some(_) => {}
        }
    }

    let mut out = draft.clone();
    for r in &mut out.resources {
        r.selected = if r.visible {
            !edits.deselect_ids.contains(&r.window_id)
        } else {
            edits.add_invisible_ids.contains(&r.window_id)
        };
    }
    if let Some(title) = &edits.title {
        // A blank title keeps the default.
        if !title.trim().is_empty() {
            out.title = title.clone();
        }
    }
    if let Some(desc) = &edits.description {
        out.description = desc.clone();
    }
    Ok(out)
}

/// Humanized distance from `created_at` to `now`, e.g. "3 days ago".
pub fn relative_timestamp(
    created_at: DateTime<Utc>,
    now: DateTime<Utc>,
) -> Result<String, ModelError> {
    let secs = (now - created_at).num_seconds();
    if now < created_at {
        return Err(ModelError::InvalidInput(format!(
            "capture time {created_at} is after now ({now})"
        )));
    }
    const MINUTE: i64 = 60;
    const HOUR: i64 = 60 * MINUTE;
    const DAY: i64 = 24 * HOUR;
    const WEEK: i64 = 7 * DAY;
    let (n, unit) = match secs {
        s if s < MINUTE => return Ok("just now".to_owned()),
        s if s < HOUR => (s / MINUTE, "minute"),
        s if s < DAY => (s / HOUR, "hour"),
        s if s < WEEK => (s / DAY, "day"),
        s => (s / WEEK, "week"),
    };
    let plural = if n == 1 { "" } else { "s" };
    Ok(format!("{n} {unit}{plural} ago"))
}

/// A record as presented in listings, with its age rendered for display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListedCapture {
    #[serde(flatten)]
    pub record: CaptureRecord,
    pub relative_time: String,
}

impl ListedCapture {
    /// Records from the future (clock skew) render as "just now".
    pub fn new(record: CaptureRecord, now: DateTime<Utc>) -> Self {
        let relative_time = relative_timestamp(record.created_at, now.max(record.created_at))
            .expect("now clamped to created_at");
        ListedCapture {
            record,
            relative_time,
        }
    }
}

pub(crate) mod timestamp {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| truncate_to_millis(t.with_timezone(&Utc)))
            .map_err(serde::de::Error::custom)
    }
}
