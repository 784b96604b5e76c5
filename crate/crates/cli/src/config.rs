//! Experiment configuration: strict JSON, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sesgd_core::error::{Error, Result};
use sesgd_core::models::TaskSpec;
use sesgd_core::netsim::LayerProfile;
use sesgd_core::{NetworkConfig, TrainConfig};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Option<String>,
    pub task: Option<TaskSpec>,
    pub n: usize,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "one")]
    pub b: usize,
    #[serde(default = "one_u64")]
    pub iterations: u64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "two_u64")]
    pub local_period: u64,
    #[serde(default)]
    pub momentum: Option<f64>,
    pub network: NetworkConfig,
    /// Builtin profile name or path to a JSON layer profile. When omitted,
    /// training runs use a single tensor sized to the task parameters.
    #[serde(default)]
    pub profile: Option<String>,
    /// Initial parameter value broadcast to every coordinate (training runs).
    #[serde(default)]
    pub init_value: Option<f64>,
    /// Latency values for `latency-sweep`, seconds.
    #[serde(default)]
    pub sweep_taus: Option<Vec<f64>>,
    /// Worker counts for `idle-table`.
    #[serde(default)]
    pub sweep_workers: Option<Vec<usize>>,
    /// Profiles for `idle-table`.
    #[serde(default)]
    pub profiles: Option<Vec<String>>,
    /// Success parameter for `theory`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Seed count for multi-seed campaigns (`theory`).
    #[serde(default)]
    pub seeds: Option<u32>,
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn two_u64() -> u64 {
    2
}
fn default_eta() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.network.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            n: self.n,
            k: self.k,
            b: self.b,
            iterations: self.iterations,
            eta: self.eta,
            seed: self.seed,
            local_period: self.local_period,
            momentum: self.momentum,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn require_task(&self) -> Result<&TaskSpec> {
        self.task
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("config is missing 'task'".into()))
    }

    pub fn require_algorithm(&self) -> Result<&str> {
        self.algorithm
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("config is missing 'algorithm'".into()))
    }

    /// Resolves a profile reference: builtin name first, then filesystem path.
    pub fn resolve_profile(&self, name: &str) -> Result<LayerProfile> {
        if let Some(p) = LayerProfile::builtin(name) {
            return Ok(p);
        }
        let path = PathBuf::from(name);
        if path.exists() {
            return LayerProfile::from_json_file(&path);
        }
        Err(Error::InvalidConfig(format!(
            "unknown profile '{name}' (builtin names: {:?})",
            LayerProfile::BUILTIN_NAMES
        )))
    }

    /// Profile for training runs; defaults to one tensor of the model size.
    pub fn training_profile(&self, task_dim: usize) -> Result<LayerProfile> {
        match &self.profile {
            Some(name) => self.resolve_profile(name),
            None => Ok(LayerProfile::single_tensor(task_dim as u64 * 8)),
        }
    }
}
