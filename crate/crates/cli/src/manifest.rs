//! Run manifests: enough resolved state to replay any run exactly.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::output::write_json;

/// Written alongside every output. `command` is the fully resolved argument
/// vector (seed, cap and trial counts included), so re-running it against a
/// fresh output directory reproduces the data files byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub master_seed: u64,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
    pub outputs: Vec<String>,
}

/// Wall-clock seconds, or `SOURCE_DATE_EPOCH` when set so that runs can be
/// made fully reproducible including their manifests.
pub fn timestamp() -> u64 {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(seconds) = epoch.parse() {
            return seconds;
        }
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: Vec<String>, master_seed: u64, started_at_unix: u64) -> Self {
        Self {
            tool: "d3sync".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            master_seed,
            started_at_unix,
            finished_at_unix: 0,
            outputs: Vec::new(),
        }
    }

    /// Stamp the end time and write to `dir/manifest.json`.
    pub fn finish(mut self, dir: &Path) -> std::io::Result<()> {
        self.finished_at_unix = timestamp();
        write_json(&dir.join("manifest.json"), &self)
    }
}
