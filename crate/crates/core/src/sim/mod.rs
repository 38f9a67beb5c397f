//! Continuous-time, event-driven simulation of both network models.
//!
//! * [`simulate_wireless`]: the randomized CSMA-style algorithm with per-node
//!   rate-1 exponential clocks and Bernoulli slot arrivals;
//! * [`simulate_circuit`]: the randomized request algorithm on a buffered
//!   circuit-switched network, with Poisson arrivals and exponential holding;
//! * [`simulate_mw`]: the slotted max-weight (or max-`f`-weight) baseline for
//!   wireless networks.
//!
//! Every run draws from a single ChaCha stream seeded by `SimConfig::seed`,
//! consumed strictly in event order, so identical configurations produce
//! identical traces.

mod circuit;
mod events;
mod mw;
mod trace;
mod wireless;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Topology, TopologyConfig};
use crate::weights::{WeightFunction, WeightMode};

pub use circuit::simulate_circuit;
pub use mw::{mw_f_schedule, mw_schedule, simulate_mw};
pub use trace::{
    check_conservation, check_feasibility, check_non_preemption, EventKind, LoggedEvent, Snapshot, Summary, Trace,
    TraceViolation,
};
pub use wireless::simulate_wireless;

/// Scheduling policy being simulated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Randomized,
    Mw,
    MwF,
}

/// Parameters of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: Topology,
    /// Bernoulli slot probability (wireless) or Poisson rate (circuit) per queue.
    pub lambda: Vec<f64>,
    pub weight_fn: WeightFunction,
    pub weight_mode: WeightMode,
    pub horizon: f64,
    pub seed: u64,
    pub sample_every: f64,
    pub algorithm: Algorithm,
    /// Disables arrivals and service and holds the weights at their initial value.
    pub frozen: bool,
    /// `Q(0)`; zero when absent.
    pub initial_queues: Option<Vec<f64>>,
    pub log_events: bool,
}

impl SimConfig {
    /// Randomized-algorithm defaults for `topology` and `lambda`.
    pub fn new(topology: Topology, lambda: Vec<f64>, horizon: f64, seed: u64) -> Self {
        Self {
            topology,
            lambda,
            weight_fn: WeightFunction::LogLog,
            weight_mode: WeightMode::WithQmax,
            horizon,
            seed,
            sample_every: 1.0,
            algorithm: Algorithm::Randomized,
            frozen: false,
            initial_queues: None,
            log_events: false,
        }
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn initial(&self) -> Vec<f64> {
        self.initial_queues.clone().unwrap_or_else(|| vec![0.0; self.n()])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.lambda.len() != n {
            return bad(format!("lambda has {} entries for {n} queues", self.lambda.len()));
        }
        if self.lambda.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return bad("lambda entries must be finite and non-negative".into());
        }
        if self.topology.is_wireless() && self.lambda.iter().any(|&l| l > 1.0) {
            return bad("wireless Bernoulli arrival probabilities must lie in [0, 1]".into());
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.sample_every > 0.0) || !self.sample_every.is_finite() {
            return bad(format!("sample_every must be positive, got {}", self.sample_every));
        }
        if let Some(q0) = &self.initial_queues {
            if q0.len() != n {
                return bad(format!("initial_queues has {} entries for {n} queues", q0.len()));
            }
            if q0.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
                return bad("initial_queues must be finite and non-negative".into());
            }
            if !self.topology.is_wireless() && q0.iter().any(|q| q.fract() != 0.0) {
                return bad("circuit initial_queues must be whole flows".into());
            }
        }
        if !self.topology.is_wireless() && self.algorithm != Algorithm::Randomized {
            return bad("max-weight baselines apply to wireless topologies only".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SimConfigFile = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        raw.build()
    }

    pub fn to_file(&self) -> SimConfigFile {
        SimConfigFile {
            topology: TopologyConfig::from(&self.topology),
            lambda: self.lambda.clone(),
            weight_fn: self.weight_fn.clone(),
            weight_mode: self.weight_mode,
            horizon: self.horizon,
            seed: self.seed,
            sample_every: self.sample_every,
            algorithm: self.algorithm,
            frozen: self.frozen,
            initial_queues: self.initial_queues.clone(),
            log_events: self.log_events,
        }
    }
}

fn default_sample_every() -> f64 {
    1.0
}

/// JSON form of [`SimConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub topology: TopologyConfig,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub weight_fn: WeightFunction,
    #[serde(default)]
    pub weight_mode: WeightMode,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub frozen: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_queues: Option<Vec<f64>>,
    #[serde(default)]
    pub log_events: bool,
}

impl SimConfigFile {
    pub fn build(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            topology: self.topology.build()?,
            lambda: self.lambda.clone(),
            weight_fn: self.weight_fn.clone(),
            weight_mode: self.weight_mode,
            horizon: self.horizon,
            seed: self.seed,
            sample_every: self.sample_every,
            algorithm: self.algorithm,
            frozen: self.frozen,
            initial_queues: self.initial_queues.clone(),
            log_events: self.log_events,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs whichever simulator matches the configured topology and algorithm.
pub fn simulate(cfg: &SimConfig) -> Result<Trace> {
    match (&cfg.topology, cfg.algorithm) {
        (Topology::Wireless(_), Algorithm::Randomized) => simulate_wireless(cfg),
        (Topology::Wireless(_), _) => simulate_mw(cfg),
        (Topology::Circuit(_), Algorithm::Randomized) => simulate_circuit(cfg),
        (Topology::Circuit(_), _) => Err(Error::ConfigInvalid(
            "max-weight baselines apply to wireless topologies only".into(),
        )),
    }
}

/// Environment variable capping the number of concurrent replicas.
pub const THREADS_ENV: &str = "SCHEDNET_THREADS";

/// Runs one replica per seed, concurrently, returning traces in ascending seed order.
pub fn run_replicas(cfg: &SimConfig, seeds: &[u64]) -> Result<Vec<Trace>> {
    replica_map(cfg, seeds, |trace| trace)
}

/// Like [`run_replicas`] but reduces each trace with `reduce` as soon as it is
/// produced, so large replica sweeps need not hold every trace in memory.
pub fn replica_map<T, F>(cfg: &SimConfig, seeds: &[u64], reduce: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Trace) -> T + Sync,
{
    use rayon::prelude::*;
    cfg.validate()?;
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let mut replica = cfg.clone();
                replica.seed = seed;
                simulate(&replica).map(&reduce)
            })
            .collect()
    })
}
