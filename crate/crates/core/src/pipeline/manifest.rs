use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Record of one run: what was asked, with which seed and settings, what
/// was written and how long it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
}

/// Collects outputs while a run is in progress.
#[derive(Debug)]
pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            manifest: RunManifest {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed,
                config,
                outputs: Vec::new(),
                started_unix_s: started,
                wall_time_s: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn output(&mut self, name: impl Into<String>) {
        self.manifest.outputs.push(name.into());
    }

    /// Writes `<command>.manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<RunManifest> {
        self.manifest.wall_time_s = self.start.elapsed().as_secs_f64();
        let name = format!("{}.manifest.json", self.manifest.command.replace(' ', "_"));
        std::fs::write(dir.join(name), serde_json::to_string_pretty(&self.manifest)?)?;
        Ok(self.manifest)
    }
}
