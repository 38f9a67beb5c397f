//! Diagnostics used to check the stability argument numerically: probability
//! distances, Lyapunov values and drift, the free-energy variational principle,
//! the near-max-weight property of the stationary law, empirical schedule laws
//! from replicated simulations, and the matrix-exponential perturbation bound.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chains::{glauber_stationary, ln_factorial, lossnet_stationary, DistributionVector};
use crate::error::{Error, Result};
use crate::linalg::{expm, inf_norm};
use crate::model::{StateSpace, Topology, DEFAULT_ENUMERATION_CAP};
use crate::sim::{replica_map, SimConfig, Trace};
use crate::weights::{node_weights, WeightFunction, WeightMode};

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// `(1/2) sum |mu - nu|`.
pub fn tv_distance(mu: &DistributionVector, nu: &DistributionVector) -> Result<f64> {
    same_len(mu.len(), nu.len())?;
    Ok(0.5 * mu.probs().iter().zip(nu.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `sqrt(sum mu (nu/mu - 1)^2)`, the L2(mu) norm of `nu/mu - 1`.
pub fn chi2_distance(nu: &DistributionVector, mu: &DistributionVector) -> Result<f64> {
    same_len(mu.len(), nu.len())?;
    if mu.probs().iter().any(|&m| m <= 0.0) {
        return Err(Error::ReferenceNotFullSupport);
    }
    let s: f64 = nu.probs().iter().zip(mu.probs()).map(|(&n, &m)| (n - m) * (n - m) / m).sum();
    Ok(s.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub tv: f64,
    /// Absent when the reference has a zero entry.
    pub chi: Option<f64>,
}

/// Distances from `mu` to the reference `reference`.
pub fn distance_report(mu: &DistributionVector, reference: &DistributionVector) -> Result<DistanceReport> {
    let tv = tv_distance(mu, reference)?;
    let chi = match chi2_distance(mu, reference) {
        Ok(c) => Some(c),
        Err(Error::ReferenceNotFullSupport) => None,
        Err(e) => return Err(e),
    };
    Ok(DistanceReport { tv, chi })
}

/// `F(x) = int_0^x f(y) dy` by adaptive Simpson on dyadic pieces, to 1e-10 relative error.
pub fn integral_of(f: &WeightFunction, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::NegativeInput(x));
    }
    let g = |y: f64| f.eval(y);
    let mut total = 0.0;
    let mut a = 0.0;
    let mut b = x.min(1.0);
    while a < x {
        total += adaptive_simpson(&g, a, b, 1e-10);
        a = b;
        b = (2.0 * b).min(x);
    }
    Ok(total)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rel * whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = (m - a) / 6.0 * (fa + 4.0 * lm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * rm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, lm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, rm, fb, right, 0.5 * tol, depth - 1)
}

/// `sum_i F(Q_i)` with `F` the integral of `log log(x + e)`.
pub fn lyapunov_wireless(q: &[f64]) -> Result<f64> {
    q.iter().map(|&x| integral_of(&WeightFunction::LogLog, x)).sum()
}

/// `sum_i F(Q_i + z_i)`.
pub fn lyapunov_circuit(q: &[f64], z: &[u32]) -> Result<f64> {
    same_len(q.len(), z.len())?;
    if let Some(&bad) = q.iter().find(|&&x| !(x >= 0.0)) {
        return Err(Error::NegativeInput(bad));
    }
    q.iter().zip(z).map(|(&x, &zi)| integral_of(&WeightFunction::LogLog, x + f64::from(zi))).sum()
}

fn lyapunov(topology: &Topology, q: &[f64], x: &[u32]) -> Result<f64> {
    if topology.is_wireless() {
        lyapunov_wireless(q)
    } else {
        lyapunov_circuit(q, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub b1: u64,
    pub b2: u64,
    pub l_start: f64,
    pub l_end: f64,
    /// `L(t + 1) - L(t)` for `t = b1 .. b2 - 1`.
    pub deltas: Vec<f64>,
    /// `(L(b2) - L(b1)) / (b2 - b1)`.
    pub drift: f64,
}

/// Lyapunov values of `trace` at the integer times `b1 ..= b2`.
pub fn drift_report(trace: &Trace, topology: &Topology, b1: u64, b2: u64) -> Result<DriftReport> {
    if b1 >= b2 || b2 as f64 > trace.horizon {
        return Err(Error::WindowOutOfRange { b1, b2, horizon: trace.horizon });
    }
    let values = (b1..=b2)
        .map(|t| {
            let s = trace.snapshot_at(t as f64)?;
            lyapunov(topology, &s.q, &s.x)
        })
        .collect::<Result<Vec<f64>>>()?;
    let deltas: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let (l_start, l_end) = (values[0], values[values.len() - 1]);
    Ok(DriftReport { b1, b2, l_start, l_end, deltas, drift: (l_end - l_start) / (b2 - b1) as f64 })
}

/// `nu_x = exp(T_x) / Z`.
pub fn gibbs_from_potential(t: &[f64]) -> Result<DistributionVector> {
    if let Some(&bad) = t.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("potential must be finite, got {bad}")));
    }
    DistributionVector::from_log_weights(t)
}

/// `E_mu T + H(mu)` with `0 log 0 = 0`.
pub fn free_energy(t: &[f64], mu: &DistributionVector) -> Result<f64> {
    same_len(t.len(), mu.len())?;
    Ok(mu
        .probs()
        .iter()
        .zip(t)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &tx)| p * tx - p * p.ln())
        .sum())
}

/// States of `topology` and the product-form stationary law for weights `w`.
pub fn stationary_law(topology: &Topology, w: &[f64]) -> Result<(StateSpace, DistributionVector)> {
    let states = topology.state_space(DEFAULT_ENUMERATION_CAP)?;
    let pi = match topology {
        Topology::Wireless(g) => glauber_stationary(g, w)?,
        Topology::Circuit(net) => {
            let phi: Vec<f64> = w.iter().map(|v| v.exp()).collect();
            lossnet_stationary(net, &phi)?
        }
    };
    Ok((states, pi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodPiReport {
    pub states: usize,
    /// `E_pi[f(Q) . x]`.
    pub expected_weight: f64,
    /// `max_y f(Q) . y`.
    pub max_weight: f64,
    /// `max_weight - expected_weight`.
    pub slack: f64,
    pub epsilon: f64,
    /// `(1 - epsilon/4) max_weight - expected_weight`: the additive constant the
    /// near-optimality bound would need here.
    pub required_constant: f64,
    /// Potential `T(x) = W . x - sum log x_i!` under the stationary law.
    pub expected_potential: f64,
    pub max_potential: f64,
    pub log_states: f64,
    /// `E_pi[T] >= max T - log |Omega|`.
    pub potential_bound_holds: bool,
    /// `max_y W . y - E_pi[W . x]`.
    pub slack_w: f64,
    /// `log |Omega| + max_x sum log x_i!`, the bound on `slack_w`.
    pub envelope: f64,
}

/// Near-max-weight check with the default weight function and mode.
pub fn verify_goodpi(topology: &Topology, q: &[f64], epsilon: f64) -> Result<GoodPiReport> {
    verify_goodpi_with(topology, q, epsilon, &WeightFunction::LogLog, WeightMode::WithQmax)
}

pub fn verify_goodpi_with(
    topology: &Topology,
    q: &[f64],
    epsilon: f64,
    f: &WeightFunction,
    mode: WeightMode,
) -> Result<GoodPiReport> {
    same_len(topology.n(), q.len())?;
    let w = node_weights(q, f, mode)?;
    let fq: Vec<f64> = q.iter().map(|&x| f.eval(x)).collect();
    let (states, pi) = stationary_law(topology, &w)?;

    let dot = |v: &[f64], x: &[u32]| v.iter().zip(x).map(|(&a, &b)| a * f64::from(b)).sum::<f64>();
    let log_fact = |x: &[u32]| x.iter().map(|&k| ln_factorial(k)).sum::<f64>();

    let mut expected_weight = 0.0;
    let mut expected_w = 0.0;
    let mut expected_potential = 0.0;
    let mut max_weight = f64::NEG_INFINITY;
    let mut max_w = f64::NEG_INFINITY;
    let mut max_potential = f64::NEG_INFINITY;
    let mut max_log_fact: f64 = 0.0;
    for (x, &p) in states.states().iter().zip(pi.probs()) {
        let (wf, ww, lf) = (dot(&fq, x), dot(&w, x), log_fact(x));
        expected_weight += p * wf;
        expected_w += p * ww;
        expected_potential += p * (ww - lf);
        max_weight = max_weight.max(wf);
        max_w = max_w.max(ww);
        max_potential = max_potential.max(ww - lf);
        max_log_fact = max_log_fact.max(lf);
    }
    let log_states = (states.len() as f64).ln();
    let scale = max_potential.abs().max(1.0);
    Ok(GoodPiReport {
        states: states.len(),
        expected_weight,
        max_weight,
        slack: max_weight - expected_weight,
        epsilon,
        required_constant: (1.0 - epsilon / 4.0) * max_weight - expected_weight,
        expected_potential,
        max_potential,
        log_states,
        potential_bound_holds: expected_potential >= max_potential - log_states - 1e-12 * scale,
        slack_w: max_w - expected_w,
        envelope: log_states + max_log_fact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    pub dist: DistributionVector,
    pub replicas: usize,
}

/// Frequencies of the schedule (or allocation) at time `t` across `traces`.
pub fn empirical_distribution(traces: &[Trace], states: &StateSpace, t: f64) -> Result<EmpiricalDistribution> {
    let xs = traces.iter().map(|tr| tr.snapshot_at(t).map(|s| s.x.as_slice())).collect::<Result<Vec<_>>>()?;
    empirical_from_states(xs, states)
}

fn empirical_from_states<'a>(xs: impl IntoIterator<Item = &'a [u32]>, states: &StateSpace) -> Result<EmpiricalDistribution> {
    let mut counts = vec![0.0; states.len()];
    let mut replicas = 0;
    for x in xs {
        let k = states
            .index_of(x)
            .ok_or_else(|| Error::InvalidArgument(format!("state {x:?} is not in the state space")))?;
        counts[k] += 1.0;
        replicas += 1;
    }
    if replicas == 0 {
        return Err(Error::EmptyVector);
    }
    Ok(EmpiricalDistribution { dist: DistributionVector::from_weights(counts)?, replicas })
}

/// Monte Carlo allowance `3 sqrt(|Omega| / replicas)` on an estimated TV distance.
pub fn tv_error_budget(states: usize, replicas: usize) -> f64 {
    3.0 * (states as f64 / replicas as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimescalePoint {
    pub t: f64,
    pub tv: f64,
    /// `(1/2) sum_x sqrt(p_x (1 - p_x) / R)`, a plug-in scale for the TV estimate.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimescaleReport {
    pub replicas: usize,
    pub states: usize,
    pub pi0: DistributionVector,
    pub points: Vec<TimescalePoint>,
}

impl TimescaleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tv,stderr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.t, p.tv, p.stderr));
        }
        out
    }
}

/// Estimates `TV(mu(t), pi(0))` from `replicas` runs of `base` started at
/// `(q0, x = 0)` with seeds `base.seed, base.seed + 1, ...`, where `pi(0)` is
/// the exact stationary law for `W(q0)`. Every requested time must fall on the
/// snapshot grid of `base`.
pub fn timescale_report(base: &SimConfig, q0: &[f64], replicas: usize, times: &[f64]) -> Result<TimescaleReport> {
    if replicas == 0 || times.is_empty() {
        return Err(Error::InvalidArgument("need at least one replica and one time".into()));
    }
    same_len(base.n(), q0.len())?;
    let w = node_weights(q0, &base.weight_fn, base.weight_mode)?;
    let (states, pi0) = stationary_law(&base.topology, &w)?;
    let mut cfg = base.clone();
    cfg.initial_queues = Some(q0.to_vec());
    cfg.horizon = times.iter().copied().fold(0.0, f64::max).max(cfg.sample_every.min(1.0));
    cfg.log_events = false;

    let seeds: Vec<u64> = (0..replicas as u64).map(|k| base.seed.wrapping_add(k)).collect();
    let per_replica = replica_map(&cfg, &seeds, |trace| {
        times
            .iter()
            .map(|&t| trace.snapshot_at(t).map(|s| s.x.clone()))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let points = times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let emp = empirical_from_states(per_replica.iter().map(|xs| xs[j].as_slice()), &states)?;
            let r = emp.replicas as f64;
            let stderr = 0.5 * emp.dist.probs().iter().map(|&p| (p * (1.0 - p) / r).sqrt()).sum::<f64>();
            Ok(TimescalePoint { t, tv: tv_distance(&emp.dist, &pi0)?, stderr })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimescaleReport { replicas, states: states.len(), pi0, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationCheck {
    /// `||e^P1 - e^P2||_inf`.
    pub lhs: f64,
    /// `e^(N M) ||P1 - P2||_inf`, `M` the larger of the two norms.
    pub rhs: f64,
    pub ok: bool,
}

/// Checks `||e^P1 - e^P2|| <= e^(N M) ||P1 - P2||` in the max-row-sum norm.
pub fn expm_perturbation_check(p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<PerturbationCheck> {
    if !p1.is_square() {
        return Err(Error::InvalidArgument("matrices must be square".into()));
    }
    if p1.shape() != p2.shape() {
        return Err(Error::DimensionMismatch { expected: p1.nrows(), got: p2.nrows() });
    }
    let n = p1.nrows() as f64;
    let m = inf_norm(p1).max(inf_norm(p2));
    let lhs = inf_norm(&(expm(p1) - expm(p2)));
    let rhs = (n * m).exp() * inf_norm(&(p1 - p2));
    Ok(PerturbationCheck { lhs, rhs, ok: lhs <= rhs + 1e-9 })
}
