//! Per-application restore commands loaded from CSV.
//!
//! ```text
//! app_matcher,resource_kind,command_template
//! *,web_page,open {value}
//! Microsoft Word,file,open -a "Microsoft Word" {value}
//! ```
//!
//! Templates are not quoted; any commas after the second separator belong
//! to the template.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use super::PlatformError;
use crate::model::ResourceKind;

pub const REGISTRY_HEADER: [&str; 3] = ["app_matcher", "resource_kind", "command_template"];
const PLACEHOLDER: &str = "{value}";

/// Used when no registry file is configured.
pub const DEFAULT_REGISTRY_CSV: &str = "\
app_matcher,resource_kind,command_template
*,web_page,open {value}
*,file,open {value}
*,application,open -a {value}
";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistryEntry {
    pub app_matcher: String,
    pub resource_kind: ResourceKind,
    pub command_template: String,
}

impl RegistryEntry {
    pub fn matches(&self, app_name: &str, kind: ResourceKind) -> bool {
        self.resource_kind == kind
            && (self.app_matcher == "*" || self.app_matcher.to_lowercase() == app_name.trim().to_lowercase())
    }

    pub fn render(&self, value: &str) -> String {
        self.command_template.replacen(PLACEHOLDER, value, 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScriptRegistry {
    pub entries: Vec<RegistryEntry>,
}

impl ScriptRegistry {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlatformError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| PlatformError::Io {
            context: format!("opening registry {}", path.display()),
            source,
        })?;
        ScriptRegistry::from_reader(file)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, PlatformError> {
        ScriptRegistry::from_reader(text.as_bytes())
    }

    pub fn builtin() -> Self {
        ScriptRegistry::from_csv_str(DEFAULT_REGISTRY_CSV).expect("built-in registry is valid")
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, PlatformError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .quoting(false)
            .trim(csv::Trim::Headers)
            .from_reader(reader);
        let err = |line: u64, message: String| PlatformError::Registry { line, message };

        let header = rdr
            .headers()
            .map_err(|e| err(1, e.to_string()))?
            .clone();
        let names: Vec<&str> = header.iter().collect();
        if names.len() < REGISTRY_HEADER.len() || names[..3] != REGISTRY_HEADER {
            let missing: Vec<&str> = REGISTRY_HEADER
                .iter()
                .copied()
                .filter(|c| !names.contains(c))
                .collect();
            let message = if missing.is_empty() {
                format!("header must be {:?}, got {names:?}", REGISTRY_HEADER.join(","))
            } else {
                format!("missing column(s) {missing:?}")
            };
            return Err(err(1, message));
        }

        let mut entries = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                err(line, e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() < 3 {
                return Err(err(line, format!("expected 3 fields, got {}", row.len())));
            }
            let app_matcher = row[0].trim().to_owned();
            if app_matcher.is_empty() {
                return Err(err(line, "empty app_matcher".into()));
            }
            let resource_kind: ResourceKind = row[1]
                .trim()
                .parse()
                .map_err(|e: crate::model::ModelError| err(line, e.to_string()))?;
            let command_template = row.iter().skip(2).collect::<Vec<_>>().join(",").trim().to_owned();
            let placeholders = command_template.matches(PLACEHOLDER).count();
            if placeholders != 1 {
                return Err(err(
                    line,
                    format!("template must contain {PLACEHOLDER} exactly once, found {placeholders}"),
                ));
            }
            entries.push(RegistryEntry {
                app_matcher,
                resource_kind,
                command_template,
            });
        }
        Ok(ScriptRegistry { entries })
    }

    /// First entry matching the application and resource kind.
    pub fn find(&self, app_name: &str, kind: ResourceKind) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.matches(app_name, kind))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
