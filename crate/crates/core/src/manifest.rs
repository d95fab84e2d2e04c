//! Run manifests: a structured record written next to every command output
//! so a run can be reproduced bit-exactly on the same build.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Everything needed to replay one CLI invocation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    /// Subcommand name.
    pub command: String,
    /// Full configuration snapshot (flags after defaulting).
    pub config: serde_json::Value,
    /// Every random seed consumed by the run.
    pub seeds: Vec<u64>,
    /// Input paths as given.
    pub inputs: Vec<String>,
    /// Paths of all artifacts written.
    pub outputs: Vec<String>,
    /// Metric name → value; infinities serialized as strings by serde_json
    /// are avoided by storing dB values capped at f64::MAX.
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    /// Path of the per-cycle energy trace, when recorded.
    #[serde(default)]
    pub energy_trace_path: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
            energy_trace_path: None,
        }
    }

    /// Records a metric, replacing non-finite values by a serializable cap.
    pub fn add_metric(&mut self, name: &str, value: f64) {
        let v = if value.is_finite() { value } else { f64::MAX };
        self.metrics.insert(name.to_string(), v);
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let mut m = RunManifest::new("denoise", serde_json::json!({"alpha": [0.25, 0.25, 0.25, 0.25]}));
        m.seeds.push(42);
        m.inputs.push("in.pfi".into());
        m.outputs.push("out.pfi".into());
        m.add_metric("psnr", 27.5);
        m.add_metric("psnr_identical", f64::INFINITY);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        m.save(&path).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.metrics["psnr_identical"], f64::MAX);
    }
}
