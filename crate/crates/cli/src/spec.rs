//! Experiment specs: a simulation config plus sweep axes and analyses.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use schednet::model::DEFAULT_ENUMERATION_CAP;
use schednet::sim::SimConfigFile;
use schednet::{capacity, SimConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Capacity,
    Drift,
    Goodpi,
    Stationary,
    Timescale,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftWindow {
    pub b1: u64,
    pub b2: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimescaleSpec {
    pub replicas: usize,
    pub times: Vec<f64>,
    /// Defaults to the simulation's initial queues.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_queues: Option<Vec<f64>>,
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sim: SimConfigFile,
    /// Empty means the single seed in `sim`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Each target rescales `sim.lambda` so its load factor equals the target.
    #[serde(default)]
    pub load_targets: Vec<f64>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftWindow>,
    #[serde(default = "default_epsilon")]
    pub goodpi_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timescale: Option<TimescaleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// One point of the load sweep.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub load_target: Option<f64>,
    pub config: SimConfig,
}

impl ExperimentSpec {
    pub fn load(path: &Path, seed_override: Option<u64>) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut spec: ExperimentSpec =
            serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.to_owned(), source })?;
        if let Some(seed) = seed_override {
            spec.seeds = vec![seed];
            spec.sim.seed = seed;
        }
        if spec.seeds.is_empty() {
            spec.seeds = vec![spec.sim.seed];
        }
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> CliResult<()> {
        if let Some(&bad) = self.load_targets.iter().find(|&&t| !t.is_finite() || t <= 0.0) {
            return Err(CliError::Spec(format!("load target must be positive, got {bad}")));
        }
        if let Some(w) = &self.drift {
            if w.b1 >= w.b2 {
                return Err(CliError::Spec(format!("drift window needs b1 < b2, got {}..{}", w.b1, w.b2)));
            }
        }
        if self.analyses.contains(&Analysis::Timescale) && self.timescale.is_none() {
            return Err(CliError::Spec("timescale analysis needs a \"timescale\" section".into()));
        }
        self.sim.build()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, after seed overrides.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(canonical))
    }

    /// Seeds in ascending order without duplicates.
    pub fn sorted_seeds(&self) -> Vec<u64> {
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        seeds
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> CliResult<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .ok_or_else(|| CliError::Spec("no output directory: pass --out or set \"output_dir\"".into()))
    }

    /// The base config, or one config per load target.
    pub fn variants(&self) -> CliResult<Vec<Variant>> {
        let base = self.sim.build()?;
        if self.load_targets.is_empty() {
            return Ok(vec![Variant { label: "base".into(), load_target: None, config: base }]);
        }
        let schedules = base.topology.state_space(DEFAULT_ENUMERATION_CAP)?;
        self.load_targets
            .iter()
            .map(|&target| {
                let mut config = base.clone();
                config.lambda = capacity::scale_to_load(&base.lambda, target, &schedules)?;
                config.validate()?;
                Ok(Variant { label: format!("load_{target}"), load_target: Some(target), config })
            })
            .collect()
    }
}
