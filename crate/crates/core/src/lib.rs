//! Screenshot bookmarks for bundles of open resources.
//!
//! A capture enumerates the windows on screen, grabs a screenshot, decides
//! which windows are visible inside the captured region and records each
//! window's restorable resource (URL, file or application). Records live in
//! a local file-backed store and can be browsed, searched, liked and
//! reopened through per-application restore commands.
//!
//! - [`visibility`]: occlusion walk over a downsampled bitmask grid, plus a
//!   painter's-algorithm reference.
//! - [`model`]: records, drafts, Capture View edits, relative timestamps.
//! - [`store`]: durable storage, collection ordering and keyword search.
//! - [`platform`]: window providers, simulated screenshots, restore scripts.

pub mod model;
pub mod platform;
pub mod store;
pub mod visibility;

pub use model::{CaptureEdits, CaptureMode, CaptureRecord, ResourceKind, ResourceLocator, ResourceRecord, WindowSnapshot};
pub use store::{SearchQuery, SortSpec, Store, StoreError};
pub use visibility::{Rect, ScreenDims, VisibilityConfig, VisibilityReport};
