use chrono::{DateTime, Utc};

use super::render::render_scenario;
use super::scenario::Scenario;
use super::PlatformError;
use crate::model::{new_capture_draft, CaptureMode, CaptureRecord, DraftInput, WindowSnapshot};
use crate::visibility::{identify_visible_windows, Rect, ScreenDims, VisibilityConfig, VisibilityReport};

/// PNG bytes plus the screen-space region they cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Screenshot {
    pub png: Vec<u8>,
    pub region: Rect,
}

/// Source of window metadata and screen pixels.
pub trait WindowProvider {
    /// Screen size and windows ordered front (index 0) to back.
    fn enumerate_windows(&self) -> Result<(ScreenDims, Vec<WindowSnapshot>), PlatformError>;

    /// Grabs the whole screen or the given region.
    fn grab_screenshot(
        &self,
        mode: CaptureMode,
        region: Option<Rect>,
    ) -> Result<Screenshot, PlatformError>;
}

pub fn enumerate_windows<P: WindowProvider + ?Sized>(
    provider: &P,
) -> Result<(ScreenDims, Vec<WindowSnapshot>), PlatformError> {
    provider.enumerate_windows()
}

pub fn grab_screenshot<P: WindowProvider + ?Sized>(
    provider: &P,
    mode: CaptureMode,
    region: Option<Rect>,
) -> Result<Screenshot, PlatformError> {
    provider.grab_screenshot(mode, region)
}

/// Resolves the capture region: the whole screen for full-screen mode, the
/// requested rectangle clipped to the screen otherwise.
pub(crate) fn effective_region(
    screen: ScreenDims,
    mode: CaptureMode,
    region: Option<Rect>,
) -> Result<Rect, PlatformError> {
    match mode {
        CaptureMode::FullScreen => Ok(screen.bounds()),
        CaptureMode::SelectedArea => {
            let requested = region.ok_or_else(|| {
                PlatformError::InvalidRegion("selected-area capture needs a region".into())
            })?;
            let clipped = requested.clip_to(screen);
            if clipped.is_empty() {
                return Err(PlatformError::InvalidRegion(format!(
                    "region {requested} is empty once clipped to the {}x{} screen",
                    screen.width_px, screen.height_px
                )));
            }
            Ok(clipped)
        }
    }
}

/// Serves a fixed [`Scenario`] in place of a live desktop.
#[derive(Debug, Clone)]
pub struct SimulatedProvider {
    scenario: Scenario,
}

impl SimulatedProvider {
    pub fn new(scenario: Scenario) -> Self {
        SimulatedProvider { scenario }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }
}

impl WindowProvider for SimulatedProvider {
    fn enumerate_windows(&self) -> Result<(ScreenDims, Vec<WindowSnapshot>), PlatformError> {
        Ok((self.scenario.screen, self.scenario.snapshots()))
    }

    fn grab_screenshot(
        &self,
        mode: CaptureMode,
        region: Option<Rect>,
    ) -> Result<Screenshot, PlatformError> {
        let region = effective_region(self.scenario.screen, mode, region)?;
        Ok(Screenshot {
            png: render_scenario(&self.scenario, region)?,
            region,
        })
    }
}

/// Placeholder for an OS-backed provider (accessibility API + screen
/// capture). Not available in this build.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeProvider;

impl WindowProvider for NativeProvider {
    fn enumerate_windows(&self) -> Result<(ScreenDims, Vec<WindowSnapshot>), PlatformError> {
        Err(PlatformError::ProviderUnavailable(
            "native window enumeration is not built in; use a scenario file".into(),
        ))
    }

    fn grab_screenshot(
        &self,
        _mode: CaptureMode,
        _region: Option<Rect>,
    ) -> Result<Screenshot, PlatformError> {
        Err(PlatformError::ProviderUnavailable(
            "native screen capture is not built in; use a scenario file".into(),
        ))
    }
}

/// A draft record with the screenshot it was made from.
#[derive(Debug, Clone)]
pub struct CaptureDraft {
    pub record: CaptureRecord,
    pub image_png: Vec<u8>,
    pub report: VisibilityReport,
}

/// Enumerate, grab, run visibility over the grabbed region and build a
/// draft with the visible windows preselected.
pub fn capture_draft<P: WindowProvider + ?Sized>(
    provider: &P,
    mode: CaptureMode,
    region: Option<Rect>,
    cfg: VisibilityConfig,
    now: DateTime<Utc>,
) -> Result<CaptureDraft, PlatformError> {
    let (screen, windows) = provider.enumerate_windows()?;
    let shot = provider.grab_screenshot(mode, region)?;
    let report = identify_visible_windows(shot.region, &windows, screen, cfg);
    let record = new_capture_draft(&DraftInput {
        snapshots: &windows,
        report: &report,
        mode,
        region: shot.region,
        now,
    })?;
    Ok(CaptureDraft {
        record,
        image_png: shot.png,
        report,
    })
}
