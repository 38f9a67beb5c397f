use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CircuitNetwork, Topology};

/// State of the network at one sampling instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub q: Vec<f64>,
    pub x: Vec<u32>,
    /// Cumulative arrivals on `[0, t]`.
    pub arrivals: Vec<u64>,
    /// Cumulative work removed from each queue on `[0, t]`: fluid service for
    /// wireless, admitted real flows for circuit.
    pub served: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Clock tick at a wireless node; `on` is the schedule bit after the tick.
    Tick { on: bool },
    Arrival,
    /// Slot-start decision of a max-weight baseline.
    Schedule { on: bool },
    Activate { flow: u64, hold: f64, dummy: bool },
    Depart { flow: u64, dummy: bool },
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub t: f64,
    /// Node or route.
    pub index: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Counters emitted alongside the snapshot CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub arrivals: Vec<u64>,
    pub departures: Vec<f64>,
    pub dummies: Vec<f64>,
    pub horizon: f64,
    pub seed: u64,
}

/// Output of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub horizon: f64,
    pub seed: u64,
    /// Strictly increasing in `t`.
    pub snapshots: Vec<Snapshot>,
    pub event_log: Option<Vec<LoggedEvent>>,
    pub arrivals: Vec<u64>,
    /// Real work completed; dummy service is excluded.
    pub departures: Vec<f64>,
    /// Dummy transmission time (wireless) or dummy flow count (circuit).
    pub dummies: Vec<f64>,
    /// Wireless clock ticks processed.
    pub ticks: u64,
}

impl Trace {
    pub fn n(&self) -> usize {
        self.arrivals.len()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            arrivals: self.arrivals.clone(),
            departures: self.departures.clone(),
            dummies: self.dummies.clone(),
            horizon: self.horizon,
            seed: self.seed,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.summary()).expect("summary serializes")
    }

    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::from("t");
        for i in 0..n {
            let _ = write!(out, ",Q_{i}");
        }
        for i in 0..n {
            let _ = write!(out, ",x_{i}");
        }
        out.push('\n');
        for s in &self.snapshots {
            let _ = write!(out, "{}", s.t);
            for q in &s.q {
                let _ = write!(out, ",{q}");
            }
            for x in &s.x {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }

    /// Event log as CSV with columns `t,kind,index,detail`; empty when logging was off.
    pub fn event_log_csv(&self) -> String {
        let mut out = String::from("t,kind,index,detail\n");
        for e in self.event_log.iter().flatten() {
            let (kind, detail) = match e.kind {
                EventKind::Tick { on } => ("tick", format!("on={}", on as u8)),
                EventKind::Arrival => ("arrival", String::new()),
                EventKind::Schedule { on } => ("schedule", format!("on={}", on as u8)),
                EventKind::Activate { flow, hold, dummy } => {
                    ("activate", format!("flow={flow};hold={hold};dummy={}", dummy as u8))
                }
                EventKind::Depart { flow, dummy } => ("depart", format!("flow={flow};dummy={}", dummy as u8)),
                EventKind::Reject => ("reject", String::new()),
            };
            let _ = writeln!(out, "{},{kind},{},{detail}", e.t, e.index);
        }
        out
    }

    /// The snapshot taken within `1e-9` of `t`.
    pub fn snapshot_at(&self, t: f64) -> Result<&Snapshot> {
        let k = self.snapshots.partition_point(|s| s.t < t - 1e-9);
        match self.snapshots.get(k) {
            Some(s) if (s.t - t).abs() <= 1e-9 => Ok(s),
            _ => Err(Error::NoSnapshotNear(t)),
        }
    }

    /// Mean of `max_i Q_i` over snapshots with `from <= t <= to`.
    pub fn mean_qmax(&self, from: f64, to: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .snapshots
            .iter()
            .filter(|s| s.t >= from && s.t <= to)
            .map(|s| s.q.iter().copied().fold(0.0, f64::max))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// A broken trace invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceViolation {
    pub t: f64,
    pub what: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}: {}", self.t, self.what)
    }
}

/// First snapshot whose schedule or allocation is infeasible, if any.
pub fn check_feasibility(trace: &Trace, topology: &Topology) -> Option<TraceViolation> {
    let mut prev = f64::NEG_INFINITY;
    for s in &trace.snapshots {
        if s.t <= prev {
            return Some(TraceViolation { t: s.t, what: "snapshot times not strictly increasing".into() });
        }
        prev = s.t;
        if !topology.is_feasible(&s.x) {
            return Some(TraceViolation { t: s.t, what: format!("infeasible state {:?}", s.x) });
        }
    }
    None
}

/// Checks `Q(t) = Q(s) + A(s,t) - D(s,t)` against the first and the previous snapshot.
pub fn check_conservation(trace: &Trace, tol: f64) -> Option<TraceViolation> {
    let first = trace.snapshots.first()?;
    for pair in trace.snapshots.windows(2) {
        let cur = &pair[1];
        for base in [first, &pair[0]] {
            for i in 0..cur.q.len() {
                let a = (cur.arrivals[i] - base.arrivals[i]) as f64;
                let d = cur.served[i] - base.served[i];
                let err = (cur.q[i] - (base.q[i] + a - d)).abs();
                if err > tol {
                    return Some(TraceViolation {
                        t: cur.t,
                        what: format!("queue {i} off by {err:e} relative to t={}", base.t),
                    });
                }
            }
        }
    }
    None
}

/// Replays a circuit event log, checking that every activation fits, that every
/// flow leaves exactly `hold` after it started, and that nothing else leaves.
pub fn check_non_preemption(trace: &Trace, net: &CircuitNetwork) -> Option<TraceViolation> {
    let log = match &trace.event_log {
        Some(log) => log,
        None => return Some(TraceViolation { t: 0.0, what: "trace has no event log".into() }),
    };
    let mut z = vec![0u32; net.n()];
    let mut active: HashMap<u64, (usize, f64, bool)> = HashMap::new();
    for e in log {
        match e.kind {
            EventKind::Activate { flow, hold, dummy } => {
                if !net.admits(&z, e.index) {
                    return Some(TraceViolation { t: e.t, what: format!("route {} activated without capacity", e.index) });
                }
                z[e.index] += 1;
                active.insert(flow, (e.index, e.t + hold, dummy));
            }
            EventKind::Depart { flow, dummy } => {
                let Some((route, due, was_dummy)) = active.remove(&flow) else {
                    return Some(TraceViolation { t: e.t, what: format!("flow {flow} departed without being active") });
                };
                if route != e.index || was_dummy != dummy || (e.t - due).abs() > 1e-9 * due.max(1.0) {
                    return Some(TraceViolation { t: e.t, what: format!("flow {flow} left early or from the wrong route") });
                }
                z[route] -= 1;
            }
            _ => {}
        }
    }
    active
        .into_iter()
        .find(|&(_, (_, due, _))| due <= trace.horizon)
        .map(|(flow, (_, due, _))| TraceViolation { t: due, what: format!("flow {flow} never departed") })
}

/// Neumaier-compensated running sum, keeping long cumulative counters exact to
/// a few ulps.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
