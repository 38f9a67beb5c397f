use super::trace::Trace;
use super::wireless::{graph, run};
use super::{Algorithm, SimConfig};
use crate::error::{Error, Result};
use crate::model::{enumerate_independent_sets, InterferenceGraph, Schedule};
use crate::weights::WeightFunction;

/// Lexicographically first schedule maximizing `Q . rho` over `I(G)`.
pub fn mw_schedule(g: &InterferenceGraph, q: &[f64]) -> Result<Schedule> {
    check_len(g, q)?;
    Ok(argmax(&enumerate_independent_sets(g)?, q).clone())
}

/// Lexicographically first schedule maximizing `f(Q) . rho` over `I(G)`.
pub fn mw_f_schedule(g: &InterferenceGraph, q: &[f64], f: &WeightFunction) -> Result<Schedule> {
    check_len(g, q)?;
    let fq = q.iter().map(|&x| f.eval(x)).collect::<Vec<_>>();
    Ok(argmax(&enumerate_independent_sets(g)?, &fq).clone())
}

fn check_len(g: &InterferenceGraph, q: &[f64]) -> Result<()> {
    if q.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: q.len() });
    }
    if let Some(&bad) = q.iter().find(|&&x| !(x >= 0.0)) {
        return Err(Error::NegativeInput(bad));
    }
    Ok(())
}

/// Enumeration is lexicographic, so keeping only strict improvements yields the
/// lexicographically first maximizer.
fn argmax<'a>(sets: &'a [Schedule], w: &[f64]) -> &'a Schedule {
    let mut best = &sets[0];
    let mut best_val = f64::NEG_INFINITY;
    for s in sets {
        let val: f64 = s.iter().zip(w).map(|(&x, &wi)| x as f64 * wi).sum();
        if val > best_val {
            best = s;
            best_val = val;
        }
    }
    best
}

/// Per-slot max-weight decision with the independent sets enumerated once.
#[derive(Debug)]
pub(super) struct SlotScheduler {
    sets: Vec<Schedule>,
    f: Option<WeightFunction>,
}

impl SlotScheduler {
    pub fn choose(&self, q: &[f64]) -> Result<Schedule> {
        let weights: Vec<f64> = match &self.f {
            Some(f) => q.iter().map(|&x| f.eval(x)).collect(),
            None => q.to_vec(),
        };
        Ok(argmax(&self.sets, &weights).clone())
    }
}

/// Slotted MW or MW-f baseline: the schedule is recomputed from `Q(tau)` at each
/// integer `tau`, held for the unit slot, and arrivals land at slot end.
pub fn simulate_mw(cfg: &SimConfig) -> Result<Trace> {
    cfg.validate()?;
    let g = graph(cfg)?;
    let f = match cfg.algorithm {
        Algorithm::Mw => None,
        Algorithm::MwF => Some(cfg.weight_fn.clone()),
        Algorithm::Randomized => {
            return Err(Error::ConfigInvalid("simulate_mw needs algorithm mw or mw_f".into()));
        }
    };
    let sched = SlotScheduler { sets: enumerate_independent_sets(g)?, f };
    run(cfg, Some(sched))
}
