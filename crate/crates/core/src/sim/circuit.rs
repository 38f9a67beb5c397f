use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::events::{snapshot_time, EventQueue};
use super::trace::{EventKind, LoggedEvent, Snapshot, Trace};
use super::SimConfig;
use crate::error::{Error, Result};
use crate::model::Topology;
use crate::weights::node_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Boundary,
    Snapshot,
    Depart(u64),
    Arrival,
    Request,
}

/// Randomized circuit-switched algorithm.
///
/// Route `i` issues requests as a Poisson process of rate `exp(W_i(floor t))`.
/// A request that fits on every link of the route starts the head-of-line flow,
/// or a dummy flow when the queue is empty; either holds its links for an
/// Exp(1) time and is never preempted. Flows arrive as Poisson(`lambda_i`).
/// In frozen mode no flows arrive and every admission is a dummy, so `Q` and
/// the weights stay at their initial values.
pub fn simulate_circuit(cfg: &SimConfig) -> Result<Trace> {
    cfg.validate()?;
    let net = match &cfg.topology {
        Topology::Circuit(net) => net,
        Topology::Wireless(_) => {
            return Err(Error::ConfigInvalid("circuit simulation needs a circuit topology".into()));
        }
    };
    let n = net.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q: Vec<u64> = cfg.initial().iter().map(|&v| v as u64).collect();
    let mut z = vec![0u32; n];
    let mut arrivals = vec![0u64; n];
    let mut admitted = vec![0u64; n];
    let mut departures = vec![0u64; n];
    let mut dummies = vec![0u64; n];
    let mut active: HashMap<u64, bool> = HashMap::new();
    let mut next_flow = 0u64;
    let mut log = cfg.log_events.then(Vec::new);
    let mut snapshots = Vec::new();

    let as_f64 = |q: &[u64]| q.iter().map(|&v| v as f64).collect::<Vec<_>>();
    let mut rates = request_rates(cfg, &as_f64(&q))?;

    let mut queue = EventQueue::new();
    queue.push(0.0, 0, Ev::Boundary);
    queue.push(0.0, 0, Ev::Snapshot);
    let mut next_snapshot = 0u64;
    if !cfg.frozen {
        for (i, &lambda) in cfg.lambda.iter().enumerate() {
            if lambda > 0.0 {
                let dt: f64 = rng.sample(Exp1);
                queue.push(dt / lambda, i as u64, Ev::Arrival);
            }
        }
    }

    let mut slot_end = 0.0;
    while let Some(ev) = queue.pop() {
        let now = ev.time;
        if now > cfg.horizon {
            break;
        }
        let i = ev.index as usize;
        match ev.kind {
            Ev::Boundary => {
                if !cfg.frozen {
                    rates = request_rates(cfg, &as_f64(&q))?;
                }
                slot_end = now + 1.0;
                for (r, &rate) in rates.iter().enumerate() {
                    let dt: f64 = rng.sample(Exp1);
                    let t = now + dt / rate;
                    if t < slot_end {
                        queue.push(t, r as u64, Ev::Request);
                    }
                }
                if slot_end <= cfg.horizon {
                    queue.push(slot_end, 0, Ev::Boundary);
                }
            }
            Ev::Snapshot => {
                snapshots.push(Snapshot {
                    t: now,
                    q: as_f64(&q),
                    x: z.clone(),
                    arrivals: arrivals.clone(),
                    served: admitted.iter().map(|&a| a as f64).collect(),
                });
                next_snapshot += 1;
                let t = snapshot_time(next_snapshot, cfg.sample_every);
                if t <= cfg.horizon {
                    queue.push(t, 0, Ev::Snapshot);
                }
            }
            Ev::Arrival => {
                q[i] += 1;
                arrivals[i] += 1;
                if let Some(log) = log.as_mut() {
                    log.push(LoggedEvent { t: now, index: i, kind: EventKind::Arrival });
                }
                let dt: f64 = rng.sample(Exp1);
                queue.push(now + dt / cfg.lambda[i], ev.index, Ev::Arrival);
            }
            Ev::Request => {
                if net.admits(&z, i) {
                    let dummy = cfg.frozen || q[i] == 0;
                    if dummy {
                        dummies[i] += 1;
                    } else {
                        q[i] -= 1;
                        admitted[i] += 1;
                    }
                    z[i] += 1;
                    let hold: f64 = rng.sample(Exp1);
                    let flow = next_flow;
                    next_flow += 1;
                    active.insert(flow, dummy);
                    queue.push(now + hold, ev.index, Ev::Depart(flow));
                    if let Some(log) = log.as_mut() {
                        log.push(LoggedEvent { t: now, index: i, kind: EventKind::Activate { flow, hold, dummy } });
                    }
                } else if let Some(log) = log.as_mut() {
                    log.push(LoggedEvent { t: now, index: i, kind: EventKind::Reject });
                }
                let dt: f64 = rng.sample(Exp1);
                let t = now + dt / rates[i];
                if t < slot_end {
                    queue.push(t, ev.index, Ev::Request);
                }
            }
            Ev::Depart(flow) => {
                let dummy = active.remove(&flow).expect("departing flow is active");
                z[i] -= 1;
                if !dummy {
                    departures[i] += 1;
                }
                if let Some(log) = log.as_mut() {
                    log.push(LoggedEvent { t: now, index: i, kind: EventKind::Depart { flow, dummy } });
                }
            }
        }
    }

    Ok(Trace {
        horizon: cfg.horizon,
        seed: cfg.seed,
        snapshots,
        event_log: log,
        arrivals,
        departures: departures.iter().map(|&d| d as f64).collect(),
        dummies: dummies.iter().map(|&d| d as f64).collect(),
        ticks: 0,
    })
}

fn request_rates(cfg: &SimConfig, q: &[f64]) -> Result<Vec<f64>> {
    Ok(node_weights(q, &cfg.weight_fn, cfg.weight_mode)?.into_iter().map(f64::exp).collect())
}
