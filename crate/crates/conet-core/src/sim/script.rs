//! Experiment scripts: content catalog, request workload, mode phases,
//! proactive pushes, and scripted interface probes.

use serde::{Deserialize, Serialize};

use crate::nrs::ControllerMode;

use super::ConfigError;

fn default_sample_interval() -> f64 {
    1.0
}

/// Finite and strictly positive (rejects NaN).
pub(crate) fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn default_summary_interval() -> f64 {
    1.0
}

fn default_files() -> u32 {
    208
}

fn default_chunks_per_file() -> u32 {
    1
}

fn default_chunk_size() -> usize {
    crate::ictp::DEFAULT_CHUNK_SIZE
}

fn default_cp_payload_size() -> usize {
    crate::ictp::DEFAULT_CP_PAYLOAD_SIZE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogCfg {
    pub prefix: String,
    #[serde(default = "default_files")]
    pub files: u32,
    #[serde(default = "default_chunks_per_file")]
    pub chunks_per_file: u32,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default = "default_cp_payload_size")]
    pub cp_payload_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestOrder {
    #[default]
    RoundRobin,
    UniformRandom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestsCfg {
    #[serde(default)]
    pub start_s: f64,
    pub interval_ms: f64,
    #[serde(default)]
    pub order: RequestOrder,
    /// Cap on the number of requests; default: run until the script ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseCfg {
    pub at_s: f64,
    pub mode: String,
}

/// Push the entire catalog into a cache at a point in time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushCfg {
    pub at_s: f64,
    pub cache: String,
}

/// A scripted management-interface call, recorded with its response.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeCfg {
    pub at_s: f64,
    pub method: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptConfig {
    #[serde(default)]
    pub seed: u64,
    pub end_s: f64,
    #[serde(default)]
    pub phases: Vec<PhaseCfg>,
    pub catalog: CatalogCfg,
    pub requests: RequestsCfg,
    #[serde(default)]
    pub pushes: Vec<PushCfg>,
    #[serde(default)]
    pub probes: Vec<ProbeCfg>,
    #[serde(default = "default_sample_interval")]
    pub sample_interval_s: f64,
    #[serde(default = "default_summary_interval")]
    pub summary_interval_s: f64,
}

impl ScriptConfig {
    /// The scaled three-phase run: learning switches, then caching until
    /// the store fully replaces the server, then learning switches again.
    pub fn three_phase() -> Self {
        serde_json::from_str(THREE_PHASE_JSON).expect("embedded script is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !positive(self.end_s) {
            return Err(ConfigError::Script("end_s must be positive".into()));
        }
        if !positive(self.sample_interval_s) || !positive(self.summary_interval_s) {
            return Err(ConfigError::Script("intervals must be positive".into()));
        }
        let mut last: Option<f64> = None;
        for p in &self.phases {
            if ControllerMode::parse(&p.mode).is_none() {
                return Err(ConfigError::Script(format!("unknown mode {:?}", p.mode)));
            }
            if p.at_s < 0.0 || p.at_s >= self.end_s {
                return Err(ConfigError::Script(format!(
                    "phase at {}s is outside the run",
                    p.at_s
                )));
            }
            if let Some(prev) = last {
                if p.at_s <= prev {
                    return Err(ConfigError::OverlappingPhases(prev, p.at_s));
                }
            }
            last = Some(p.at_s);
        }
        if self.catalog.files == 0 || self.catalog.chunks_per_file == 0 {
            return Err(ConfigError::Script("catalog must contain content".into()));
        }
        if !positive(self.requests.interval_ms) {
            return Err(ConfigError::Script(
                "request interval must be positive".into(),
            ));
        }
        if self.requests.start_s < 0.0 {
            return Err(ConfigError::Script(
                "requests cannot start before time zero".into(),
            ));
        }
        for push in &self.pushes {
            if push.at_s < 0.0 || push.at_s >= self.end_s {
                return Err(ConfigError::Script(format!(
                    "push at {}s is outside the run",
                    push.at_s
                )));
            }
        }
        for probe in &self.probes {
            if probe.at_s < 0.0 || probe.at_s >= self.end_s {
                return Err(ConfigError::Script(format!(
                    "probe at {}s is outside the run",
                    probe.at_s
                )));
            }
            if probe.method != "GET" && probe.method != "POST" {
                return Err(ConfigError::Script(format!(
                    "unsupported probe method {:?}",
                    probe.method
                )));
            }
        }
        Ok(())
    }
}

pub const THREE_PHASE_JSON: &str = r#"{
  "seed": 1,
  "end_s": 240.0,
  "phases": [
    { "at_s": 0.0,   "mode": "mac_learning" },
    { "at_s": 60.0,  "mode": "caching" },
    { "at_s": 180.0, "mode": "mac_learning" }
  ],
  "catalog": {
    "prefix": "conet.example",
    "files": 208,
    "chunks_per_file": 1,
    "chunk_size": 4096,
    "cp_payload_size": 1024
  },
  "requests": { "start_s": 0.0, "interval_ms": 50.0, "order": "round_robin" },
  "sample_interval_s": 1.0,
  "summary_interval_s": 1.0
}"#;
