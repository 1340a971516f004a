//! Turning a stored capture back into open applications.

use std::collections::BTreeSet;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::registry::ScriptRegistry;
use super::PlatformError;
use crate::model::CaptureRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestoreAction {
    pub capture_id: String,
    pub window_id: String,
    pub command: String,
    pub executed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedResource {
    pub window_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RestorePlan {
    pub actions: Vec<RestoreAction>,
    pub skipped: Vec<SkippedResource>,
}

/// Plans one command per chosen resource, in the record's resource order.
///
/// `resource_ids = None` chooses the resources marked selected. Chosen
/// resources without a locator or without a registry entry for their
/// application and kind are reported in `skipped`.
pub fn plan_restore(
    record: &CaptureRecord,
    resource_ids: Option<&BTreeSet<String>>,
    registry: &ScriptRegistry,
) -> Result<RestorePlan, PlatformError> {
    if let Some(ids) = resource_ids {
        if let Some(unknown) = ids.iter().find(|id| record.resource(id).is_none()) {
            return Err(PlatformError::InvalidInput(format!(
                "capture {} has no resource {unknown:?}",
                record.capture_id
            )));
        }
    }
    let mut plan = RestorePlan::default();
    for res in &record.resources {
        let chosen = match resource_ids {
            Some(ids) => ids.contains(&res.window_id),
            None => res.selected,
        };
        if !chosen {
            continue;
        }
        let Some(loc) = &res.locator else {
            plan.skipped.push(SkippedResource {
                window_id: res.window_id.clone(),
                reason: format!("{} exposed no restorable resource", res.app_name),
            });
            continue;
        };
        match registry.find(&res.app_name, loc.kind) {
            Some(entry) => plan.actions.push(RestoreAction {
                capture_id: record.capture_id.clone(),
                window_id: res.window_id.clone(),
                command: entry.render(&loc.value),
                executed: false,
                error: None,
            }),
            None => plan.skipped.push(SkippedResource {
                window_id: res.window_id.clone(),
                reason: format!("no restore script for {} ({})", res.app_name, loc.kind),
            }),
        }
    }
    Ok(plan)
}

/// Runs restore commands.
pub trait Executor: Send + Sync {
    fn run(&self, command: &str) -> Result<(), String>;
}

/// Records each command instead of running it.
#[derive(Debug, Default)]
pub struct EchoExecutor {
    log: Mutex<Vec<String>>,
}

impl EchoExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lines(&self) -> Vec<String> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Executor for EchoExecutor {
    fn run(&self, command: &str) -> Result<(), String> {
        log::info!("restore: {command}");
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(command.to_owned());
        Ok(())
    }
}

/// Runs every action; a failure is recorded on that action and the rest
/// still run.
pub fn execute_restore(actions: Vec<RestoreAction>, executor: &dyn Executor) -> Vec<RestoreAction> {
    actions
        .into_iter()
        .map(|mut action| {
            match executor.run(&action.command) {
                Ok(()) => {
                    action.executed = true;
                    action.error = None;
                }
                Err(e) => {
                    log::warn!("restore of {} failed: {e}", action.window_id);
                    action.executed = false;
                    action.error = Some(e);
                }
            }
            action
        })
        .collect()
}
