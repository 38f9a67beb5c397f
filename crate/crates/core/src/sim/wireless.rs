use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::events::{snapshot_time, EventQueue};
use super::mw::SlotScheduler;
use super::trace::{CompensatedSum, EventKind, LoggedEvent, Snapshot, Trace};
use super::{Algorithm, SimConfig};
use crate::chains::activation_probability;
use crate::error::{Error, Result};
use crate::model::{InterferenceGraph, Topology};
use crate::weights::node_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Boundary,
    Snapshot,
    Tick,
}

/// Randomized wireless algorithm: each node carries a rate-1 exponential clock
/// and, on a tick, switches off if a neighbour is on and otherwise switches on
/// with probability `e^W / (1 + e^W)`.
pub fn simulate_wireless(cfg: &SimConfig) -> Result<Trace> {
    cfg.validate()?;
    if cfg.algorithm != Algorithm::Randomized {
        return Err(Error::ConfigInvalid("simulate_wireless runs the randomized algorithm only".into()));
    }
    run(cfg, None)
}

pub(super) fn graph(cfg: &SimConfig) -> Result<&InterferenceGraph> {
    match &cfg.topology {
        Topology::Wireless(g) => Ok(g),
        Topology::Circuit(_) => Err(Error::ConfigInvalid("wireless simulation needs a wireless topology".into())),
    }
}

/// Shared engine. With a slot scheduler the schedule is set at every integer
/// time instead of by clock ticks.
pub(super) fn run(cfg: &SimConfig, slotted: Option<SlotScheduler>) -> Result<Trace> {
    let g = graph(cfg)?;
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = cfg.initial();
    let mut sigma = vec![0u32; n];
    let mut arrivals = vec![0u64; n];
    let mut served = vec![CompensatedSum::default(); n];
    let mut dummy = vec![CompensatedSum::default(); n];
    let mut log = cfg.log_events.then(Vec::new);
    let mut snapshots = Vec::new();
    let mut ticks = 0u64;
    let mut w = node_weights(&q, &cfg.weight_fn, cfg.weight_mode)?;

    let mut queue = EventQueue::new();
    if slotted.is_none() {
        for i in 0..n {
            let dt: f64 = rng.sample(Exp1);
            queue.push(dt, i as u64, Ev::Tick);
        }
    }
    if 1.0 <= cfg.horizon {
        queue.push(1.0, 0, Ev::Boundary);
    }
    let mut next_snapshot = 0u64;
    queue.push(0.0, 0, Ev::Snapshot);

    if let Some(sched) = slotted.as_ref() {
        apply_schedule(sched, &q, &mut sigma, 0.0, &mut log)?;
    }

    let mut now = 0.0;
    while let Some(ev) = queue.pop() {
        if ev.time > cfg.horizon {
            break;
        }
        if !cfg.frozen {
            serve(&mut q, &sigma, ev.time - now, &mut served, &mut dummy);
        }
        now = ev.time;
        match ev.kind {
            Ev::Boundary => {
                if !cfg.frozen {
                    for i in 0..n {
                        if rng.random_bool(cfg.lambda[i]) {
                            q[i] += 1.0;
                            arrivals[i] += 1;
                            if let Some(log) = log.as_mut() {
                                log.push(LoggedEvent { t: now, index: i, kind: EventKind::Arrival });
                            }
                        }
                    }
                    w = node_weights(&q, &cfg.weight_fn, cfg.weight_mode)?;
                }
                if let Some(sched) = slotted.as_ref() {
                    if !cfg.frozen {
                        apply_schedule(sched, &q, &mut sigma, now, &mut log)?;
                    }
                }
                let next = now + 1.0;
                if next <= cfg.horizon {
                    queue.push(next, 0, Ev::Boundary);
                }
            }
            Ev::Snapshot => {
                snapshots.push(Snapshot {
                    t: now,
                    q: q.clone(),
                    x: sigma.clone(),
                    arrivals: arrivals.clone(),
                    served: served.iter().map(CompensatedSum::value).collect(),
                });
                next_snapshot += 1;
                let t = snapshot_time(next_snapshot, cfg.sample_every);
                if t <= cfg.horizon {
                    queue.push(t, 0, Ev::Snapshot);
                }
            }
            Ev::Tick => {
                let i = ev.index as usize;
                ticks += 1;
                sigma[i] = if g.blocked(i, &sigma) {
                    0
                } else {
                    rng.random_bool(activation_probability(w[i])) as u32
                };
                if let Some(log) = log.as_mut() {
                    log.push(LoggedEvent { t: now, index: i, kind: EventKind::Tick { on: sigma[i] == 1 } });
                }
                let dt: f64 = rng.sample(Exp1);
                queue.push(now + dt, ev.index, Ev::Tick);
            }
        }
    }
    if !cfg.frozen {
        serve(&mut q, &sigma, cfg.horizon - now, &mut served, &mut dummy);
    }

    Ok(Trace {
        horizon: cfg.horizon,
        seed: cfg.seed,
        snapshots,
        event_log: log,
        arrivals,
        departures: served.iter().map(CompensatedSum::value).collect(),
        dummies: dummy.iter().map(CompensatedSum::value).collect(),
        ticks,
    })
}

/// Unit-rate fluid service over `dt` to every scheduled queue.
fn serve(q: &mut [f64], sigma: &[u32], dt: f64, served: &mut [CompensatedSum], dummy: &mut [CompensatedSum]) {
    if dt <= 0.0 {
        return;
    }
    for i in 0..q.len() {
        if sigma[i] == 1 {
            let s = q[i].min(dt);
            q[i] -= s;
            served[i].add(s);
            dummy[i].add(dt - s);
        }
    }
}

fn apply_schedule(
    sched: &SlotScheduler,
    q: &[f64],
    sigma: &mut Vec<u32>,
    now: f64,
    log: &mut Option<Vec<LoggedEvent>>,
) -> Result<()> {
    let next = sched.choose(q)?;
    if let Some(log) = log.as_mut() {
        for (i, (&old, &new)) in sigma.iter().zip(&next).enumerate() {
            if old != new {
                log.push(LoggedEvent { t: now, index: i, kind: EventKind::Schedule { on: new == 1 } });
            }
        }
    }
    *sigma = next;
    Ok(())
}
