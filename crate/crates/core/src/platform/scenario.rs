//! Scenario files: a headless stand-in for a live desktop.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::render::Rgb;
use super::PlatformError;
use crate::model::{is_safe_id, ResourceLocator, WindowSnapshot};
use crate::visibility::{Rect, ScreenDims};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioWindow {
    pub snapshot: WindowSnapshot,
    /// Fill color used by the synthetic renderer.
    pub color: Option<Rgb>,
}

/// A screen plus its windows, front to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub screen: ScreenDims,
    pub windows: Vec<ScenarioWindow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawScenario {
    screen: ScreenDims,
    #[serde(default)]
    windows: Vec<RawWindow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawWindow {
    window_id: String,
    app_name: String,
    #[serde(default)]
    window_title: String,
    bounds: Rect,
    #[serde(default)]
    locator: Option<ResourceLocator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color: Option<String>,
    /// Optional; when present it must equal the array position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z_index: Option<u32>,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlatformError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PlatformError::Io {
            context: format!("reading scenario {}", path.display()),
            source,
        })?;
        Scenario::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, PlatformError> {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| PlatformError::ScenarioParse(e.to_string()))?;
        Scenario::from_raw(raw)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, PlatformError> {
        let raw: RawScenario =
            serde_json::from_value(value).map_err(|e| PlatformError::ScenarioParse(e.to_string()))?;
        Scenario::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self, PlatformError> {
        raw.screen
            .validate()
            .map_err(|e| PlatformError::InvalidScenario(e.to_string()))?;
        let mut ids = BTreeSet::new();
        let mut zs = BTreeSet::new();
        let mut windows = Vec::with_capacity(raw.windows.len());
        for (pos, w) in raw.windows.into_iter().enumerate() {
            if !is_safe_id(&w.window_id) {
                return Err(PlatformError::InvalidScenario(format!(
                    "window_id {:?} must be 1-128 chars of [A-Za-z0-9_-]",
                    w.window_id
                )));
            }
            if !ids.insert(w.window_id.clone()) {
                return Err(PlatformError::InvalidScenario(format!(
                    "duplicate window_id {:?}",
                    w.window_id
                )));
            }
            let z = w.z_index.unwrap_or(pos as u32);
            if !zs.insert(z) {
                return Err(PlatformError::InvalidScenario(format!(
                    "duplicate z_index {z} (window {:?})",
                    w.window_id
                )));
            }
            if z as usize != pos {
                return Err(PlatformError::InvalidScenario(format!(
                    "window {:?} has z_index {z} but sits at position {pos}; list order is front-to-back",
                    w.window_id
                )));
            }
            if let Some(loc) = &w.locator {
                loc.validate()?;
            }
            let color = w
                .color
                .as_deref()
                .map(str::parse::<Rgb>)
                .transpose()
                .map_err(PlatformError::InvalidScenario)?;
            windows.push(ScenarioWindow {
                snapshot: WindowSnapshot {
                    window_id: w.window_id,
                    app_name: w.app_name,
                    window_title: w.window_title,
                    bounds: w.bounds,
                    z_index: z,
                    locator: w.locator,
                },
                color,
            });
        }
        Ok(Scenario {
            screen: raw.screen,
            windows,
        })
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawScenario {
            screen: self.screen,
            windows: self
                .windows
                .iter()
                .map(|w| RawWindow {
                    window_id: w.snapshot.window_id.clone(),
                    app_name: w.snapshot.app_name.clone(),
                    window_title: w.snapshot.window_title.clone(),
                    bounds: w.snapshot.bounds,
                    locator: w.snapshot.locator.clone(),
                    color: w.color.map(|c| c.to_string()),
                    z_index: None,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("scenario serializes")
    }

    pub fn snapshots(&self) -> Vec<WindowSnapshot> {
        self.windows.iter().map(|w| w.snapshot.clone()).collect()
    }
}

/// Parses `x,y,w,h` (pixels) as used on the command line.
pub fn parse_region(text: &str) -> Result<Rect, PlatformError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || PlatformError::InvalidRegion(format!("expected x,y,w,h but got {text:?}"));
    let [x, y, w, h] = parts.as_slice() else {
        return Err(bad());
    };
    Ok(Rect::new(
        x.parse().map_err(|_| bad())?,
        y.parse().map_err(|_| bad())?,
        w.parse().map_err(|_| bad())?,
        h.parse().map_err(|_| bad())?,
    ))
}
