use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::output::write_file;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

/// Record of one run. Written for every invocation, including failed ones.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub software: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: Option<String>,
    /// The config file as read.
    pub config_text: Option<String>,
    /// The config after defaults and command-line overrides.
    pub resolved_config: Option<Value>,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub stages: Vec<Stage>,
    pub diagnostics: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_path: None,
            config_text: None,
            resolved_config: None,
            status: "running".into(),
            exit_code: 0,
            error: None,
            stages: Vec::new(),
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn time<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.stages.push(Stage { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        r
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&dir.join(MANIFEST_NAME), &(text + "\n"))
    }
}
