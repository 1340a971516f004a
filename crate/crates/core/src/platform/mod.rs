//! Boundary to the operating system.
//!
//! Window enumeration and screen grabs go through [`WindowProvider`];
//! reopening resources goes through an [`Executor`]. The in-repo
//! implementations are scenario-backed ([`SimulatedProvider`]) and
//! logging-only ([`EchoExecutor`]). [`NativeProvider`] marks where a real
//! accessibility / screen-capture backend plugs in.

mod font;
mod provider;
mod registry;
mod render;
mod restore;
mod scenario;

use std::io;

use thiserror::Error;

use crate::model::ModelError;

pub use provider::{
    capture_draft, enumerate_windows, grab_screenshot, CaptureDraft, NativeProvider,
    Screenshot, SimulatedProvider, WindowProvider,
};
pub use registry::{RegistryEntry, ScriptRegistry, DEFAULT_REGISTRY_CSV, REGISTRY_HEADER};
pub use render::{render_scenario, Rgb, DESKTOP_COLOR, LABEL_DARK, LABEL_LIGHT};
pub use restore::{
    execute_restore, plan_restore, EchoExecutor, Executor, RestoreAction, RestorePlan,
    SkippedResource,
};
pub use scenario::{parse_region, Scenario, ScenarioWindow};

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("window provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("scenario parse error: {0}")]
    ScenarioParse(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("script registry line {line}: {message}")]
    Registry { line: u64, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("image encoding failed: {0}")]
    Encode(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}
