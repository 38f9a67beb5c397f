//! Built-in invariant suites over randomized instances drawn from a fixed
//! master seed. Reports are deterministic text.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{chi2_distance, expm_perturbation_check, free_energy, gibbs_from_potential, lyapunov_wireless, tv_distance};
use crate::capacity::{load_factor, CapacityQuery};
use crate::chains::{
    glauber_kernel, glauber_stationary, kernel_norm, lossnet_kernel, lossnet_stationary, mixing_bound_glauber,
    mixing_bound_lossnet, stationary_from_kernel, uniformized_kernel, ChainKernel, DistributionVector,
};
use crate::error::{Error, Result};
use crate::model::{CircuitNetwork, InterferenceGraph, Link, Topology};
use crate::weights::{decade_grid, f_loglog, inverse, node_weights, validate_weight_function, WeightFunction, WeightMode};

pub const MASTER_SEED: u64 = 0x5c4e_d7e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Chains,
    Analysis,
    Weights,
    Capacity,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Chains => "chains",
            Suite::Analysis => "analysis",
            Suite::Weights => "weights",
            Suite::Capacity => "capacity",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "chains" => Suite::Chains,
            "analysis" => Suite::Analysis,
            "weights" => Suite::Weights,
            "capacity" => Suite::Capacity,
            "all" => Suite::All,
            other => return Err(Error::InvalidArgument(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub master_seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}/{}: {}", c.suite, c.name, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        writeln!(f, "{passed}/{} checks passed (master seed {:#x})", self.checks.len(), self.master_seed)
    }
}

/// Runs `suite` with instances drawn from `master_seed`.
pub fn run_suite(suite: Suite, master_seed: u64) -> VerifyReport {
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Chains, Suite::Analysis, Suite::Weights, Suite::Capacity],
        one => std::slice::from_ref(match one {
            Suite::Chains => &Suite::Chains,
            Suite::Analysis => &Suite::Analysis,
            Suite::Weights => &Suite::Weights,
            _ => &Suite::Capacity,
        }),
    };
    let mut checks = Vec::new();
    for &s in suites {
        // Each suite has its own stream so `all` reproduces the single-suite reports.
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let found = match s {
            Suite::Chains => chains_suite(&mut rng),
            Suite::Analysis => analysis_suite(&mut rng),
            Suite::Weights => weights_suite(),
            Suite::Capacity => capacity_suite(&mut rng),
            Suite::All => unreachable!(),
        };
        checks.extend(found.into_iter().map(|(name, outcome)| {
            let (passed, detail) = match outcome {
                Ok((passed, detail)) => (passed, detail),
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult { suite: s.name(), name, passed, detail }
        }));
    }
    VerifyReport { master_seed, checks }
}

type Outcome = Result<(bool, String)>;

/// Random graph on 1..=`max_n` nodes with edge probability 1/2.
pub fn random_graph(rng: &mut impl Rng, max_n: usize) -> InterferenceGraph {
    let n = rng.random_range(1..=max_n);
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|_| rng.random_bool(0.5)).collect();
    InterferenceGraph::new(n, edges).expect("generated graph is valid")
}

/// Random circuit network with at most `max_states` allocations.
pub fn random_circuit(rng: &mut impl Rng, max_states: usize) -> CircuitNetwork {
    loop {
        let links: Vec<Link> =
            (0..rng.random_range(1..=3)).map(|e| Link { id: format!("e{e}"), capacity: rng.random_range(1..=3) }).collect();
        let routes: Vec<Vec<String>> = (0..rng.random_range(1..=3))
            .map(|_| {
                let mut ids: Vec<String> = links.iter().filter(|_| rng.random_bool(0.5)).map(|l| l.id.clone()).collect();
                if ids.is_empty() {
                    ids.push(links.choose(rng).expect("non-empty").id.clone());
                }
                ids
            })
            .collect();
        let net = CircuitNetwork::new(links, routes).expect("generated network is valid");
        if Topology::Circuit(net.clone()).state_space(max_states).is_ok() {
            return net;
        }
    }
}

fn sup_diff(a: &DistributionVector, b: &DistributionVector) -> f64 {
    a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn glauber_instances(rng: &mut ChaCha8Rng, count: usize) -> Vec<(InterferenceGraph, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let g = random_graph(rng, 5);
            let w = (0..g.n()).map(|_| rng.random_range(0.0..3.0)).collect();
            (g, w)
        })
        .collect()
}

fn lossnet_instances(rng: &mut ChaCha8Rng, count: usize) -> Vec<(CircuitNetwork, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let net = random_circuit(rng, 256);
            let w = (0..net.n()).map(|_| rng.random_range(0.0..3.0)).collect();
            (net, w)
        })
        .collect()
}

fn chains_suite(rng: &mut ChaCha8Rng) -> Vec<(&'static str, Outcome)> {
    let glauber = glauber_instances(rng, 20);
    let lossnet = lossnet_instances(rng, 20);

    let glauber_pf = || -> Outcome {
        let mut worst_db: f64 = 0.0;
        let mut worst_pf: f64 = 0.0;
        for (g, w) in &glauber {
            let k = glauber_kernel(g, w)?;
            worst_db = worst_db.max(k.detailed_balance_error().unwrap_or(f64::INFINITY));
            worst_pf = worst_pf.max(sup_diff(&glauber_stationary(g, w)?, &stationary_from_kernel(&k)?));
        }
        Ok((worst_db <= 1e-12 && worst_pf <= 1e-10, format!("detailed balance {worst_db:.2e}, product form {worst_pf:.2e} over 20 graphs")))
    };
    let lossnet_pf = || -> Outcome {
        let mut worst_db: f64 = 0.0;
        let mut worst_pf: f64 = 0.0;
        for (net, w) in &lossnet {
            let phi: Vec<f64> = w.iter().map(|v| v.exp()).collect();
            let k = lossnet_kernel(net, &phi)?;
            worst_db = worst_db.max(k.detailed_balance_error().unwrap_or(f64::INFINITY));
            worst_pf = worst_pf.max(sup_diff(&lossnet_stationary(net, &phi)?, &stationary_from_kernel(&k)?));
        }
        Ok((worst_db <= 1e-12 && worst_pf <= 1e-10, format!("detailed balance {worst_db:.2e}, product form {worst_pf:.2e} over 20 networks")))
    };
    let glauber_bounds = || -> Outcome {
        let mut ok = true;
        let mut min_margin = f64::INFINITY;
        for (g, w) in &glauber {
            let k = glauber_kernel(g, w)?;
            let w_max = w.iter().copied().fold(0.0, f64::max);
            let b = mixing_bound_glauber(g.n(), w_max)?;
            let p = kernel_norm(&k)?;
            let u = kernel_norm(&uniformized_kernel(&k, g.n() as f64)?)?;
            ok &= b.kernel.dominates(p) && b.uniformized.dominates(u);
            min_margin = min_margin.min(((1.0 - p) / b.kernel.gap()).min((1.0 - u) / b.uniformized.gap()));
        }
        Ok((ok, format!("smallest gap ratio (actual / bound) {min_margin:.3e}")))
    };
    let lossnet_bounds = || -> Outcome {
        let mut ok = true;
        let mut min_margin = f64::INFINITY;
        for (net, w) in &lossnet {
            let phi: Vec<f64> = w.iter().map(|v| v.exp()).collect();
            let k = lossnet_kernel(net, &phi)?;
            let w_max = w.iter().copied().fold(0.0, f64::max);
            let b = mixing_bound_lossnet(net.n(), net.c_max(), w_max)?;
            let rate = net.n() as f64 * crate::chains::lossnet_normalizer(net, &phi);
            let p = kernel_norm(&k)?;
            let u = kernel_norm(&uniformized_kernel(&k, rate)?)?;
            ok &= b.kernel.dominates(p) && b.uniformized.dominates(u);
            min_margin = min_margin.min(((1.0 - p) / b.kernel.gap()).min((1.0 - u) / b.uniformized.gap()));
        }
        Ok((ok, format!("smallest gap ratio (actual / bound) {min_margin:.3e}")))
    };
    let norm_is_lambda_max = || -> Outcome {
        let mut worst: f64 = 0.0;
        for (g, w) in &glauber {
            let k = glauber_kernel(g, w)?;
            worst = worst.max((kernel_norm(&k)? - second_eigenvalue(&k)).abs());
        }
        Ok((worst <= 1e-9, format!("max |norm - lambda_max| {worst:.2e}")))
    };
    vec![
        ("glauber_product_form", glauber_pf()),
        ("lossnet_product_form", lossnet_pf()),
        ("glauber_mixing_bounds", glauber_bounds()),
        ("lossnet_mixing_bounds", lossnet_bounds()),
        ("norm_equals_lambda_max", norm_is_lambda_max()),
    ]
}

/// Largest absolute eigenvalue of a reversible kernel other than the unit one.
fn second_eigenvalue(k: &ChainKernel) -> f64 {
    let pi = k.stationary().expect("builders attach pi").probs().to_vec();
    let n = pi.len();
    let s = DMatrix::from_fn(n, n, |i, j| pi[i].sqrt() * k.matrix()[(i, j)] / pi[j].sqrt());
    let sym = (&s + s.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max)
}

fn random_distribution(rng: &mut impl Rng, m: usize, full_support: bool) -> DistributionVector {
    let mut w: Vec<f64> = (0..m)
        .map(|_| {
            let v: f64 = rng.random_range(0.0..1.0);
            if !full_support && rng.random_bool(0.2) {
                0.0
            } else {
                v + 1e-3
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..m)] = 1.0;
    }
    DistributionVector::from_weights(w).expect("positive total weight")
}

fn analysis_suite(rng: &mut ChaCha8Rng) -> Vec<(&'static str, Outcome)> {
    let mut chi_tv = || -> Outcome {
        let mut worst = f64::INFINITY;
        for _ in 0..200 {
            let m = rng.random_range(2..=16);
            let mu = random_distribution(rng, m, true);
            let nu = random_distribution(rng, m, false);
            worst = worst.min(chi2_distance(&nu, &mu)? - 2.0 * tv_distance(&nu, &mu)?);
        }
        Ok((worst >= -1e-12, format!("min chi - 2 tv over 200 pairs {worst:.3e}")))
    };
    let chi_tv = chi_tv();

    let mut variational = || -> Outcome {
        let mut worst_gap = f64::INFINITY;
        let mut worst_bound = f64::INFINITY;
        for _ in 0..50 {
            let m = rng.random_range(1..=64);
            let t: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let nu = gibbs_from_potential(&t)?;
            let f_nu = free_energy(&t, &nu)?;
            for _ in 0..100 {
                let mu = random_distribution(rng, m, false);
                worst_gap = worst_gap.min(f_nu - free_energy(&t, &mu)?);
            }
            let e_t: f64 = nu.probs().iter().zip(&t).map(|(p, x)| p * x).sum();
            let max_t = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            worst_bound = worst_bound.min(e_t - (max_t - (m as f64).ln()));
        }
        Ok((
            worst_gap >= -1e-9 && worst_bound >= -1e-9,
            format!("min F(nu) - F(mu) {worst_gap:.3e}; min E[T] - (max T - log|Omega|) {worst_bound:.3e}"),
        ))
    };
    let variational = variational();

    let mut perturbation = || -> Outcome {
        let mut failures = 0;
        let mut worst_ratio: f64 = 0.0;
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let p1 = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
            let p2 = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
            let c = expm_perturbation_check(&p1, &p2)?;
            failures += usize::from(!c.ok);
            if c.rhs > 0.0 {
                worst_ratio = worst_ratio.max(c.lhs / c.rhs);
            }
        }
        Ok((failures == 0, format!("{failures} failures in 200; max lhs/rhs {worst_ratio:.3e}")))
    };
    let perturbation = perturbation();

    let mut contraction = || -> Outcome {
        let mut worst = f64::INFINITY;
        for (g, w) in glauber_instances(rng, 20) {
            let k = glauber_kernel(&g, &w)?;
            let pi = k.stationary().expect("builders attach pi").clone();
            let norm = kernel_norm(&k)?;
            for _ in 0..10 {
                let mu = random_distribution(rng, k.len(), false);
                let mu_p: Vec<f64> = (0..k.len())
                    .map(|j| (0..k.len()).map(|i| mu.probs()[i] * k.matrix()[(i, j)]).sum())
                    .collect();
                let mu_p = DistributionVector::with_tolerance(mu_p, 1e-9)?;
                worst = worst.min(norm * chi2_distance(&mu, &pi)? - chi2_distance(&mu_p, &pi)?);
            }
        }
        Ok((worst >= -1e-12, format!("min ||P|| chi(mu) - chi(mu P) {worst:.3e}")))
    };
    let contraction = contraction();

    let mut convexity = || -> Outcome {
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1e4)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1e4)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let gap = 0.5 * (lyapunov_wireless(&a)? + lyapunov_wireless(&b)?) - lyapunov_wireless(&mid)?;
            worst = worst.min(gap / lyapunov_wireless(&mid)?.max(1.0));
        }
        Ok((worst >= -1e-9, format!("min relative midpoint gap {worst:.3e}")))
    };
    let convexity = convexity();

    vec![
        ("chi_at_least_twice_tv", chi_tv),
        ("free_energy_maximizer", variational),
        ("expm_perturbation", perturbation),
        ("chi_contraction", contraction),
        ("lyapunov_convexity", convexity),
    ]
}

fn weights_suite() -> Vec<(&'static str, Outcome)> {
    let loglog_values = || -> Outcome {
        let e = std::f64::consts::E;
        let at_zero = f_loglog(0.0)?;
        let at_ee = f_loglog(e.powf(e) - e)?;
        Ok((at_zero == 0.0 && (at_ee - 1.0).abs() < 1e-12, format!("f(0) = {at_zero}, f(e^e - e) = {at_ee:.15}")))
    };
    let floor = || -> Outcome {
        let q = [0.0, 3.0, 250.0, 1e6];
        let w = node_weights(&q, &WeightFunction::LogLog, WeightMode::WithQmax)?;
        let root = f_loglog(1e6)?.sqrt();
        let ok = w.iter().zip(&q).all(|(&wi, &qi)| wi >= root && wi >= f_loglog(qi).unwrap_or(f64::INFINITY));
        Ok((ok, format!("W = {w:?}")))
    };
    let roundtrip = || -> Outcome {
        let f = WeightFunction::LogLog;
        let mut worst: f64 = 0.0;
        for x in decade_grid(0, 12) {
            let back = inverse(&f, f.eval(x)).ok_or_else(|| Error::InvalidArgument("no inverse".into()))?;
            worst = worst.max((back - x).abs() / x);
        }
        Ok((worst <= 1e-9, format!("max relative inverse error {worst:.2e}")))
    };
    let screen = || -> Outcome {
        let loglog = validate_weight_function(&WeightFunction::LogLog, &decade_grid(1, 40))?;
        let identity = validate_weight_function(&WeightFunction::custom("identity", |x| x), &decade_grid(1, 40))?;
        Ok((loglog.pass && !identity.pass, format!("loglog pass={}, identity pass={}", loglog.pass, identity.pass)))
    };
    vec![
        ("loglog_reference_values", loglog_values()),
        ("qmax_floor", floor()),
        ("inverse_roundtrip", roundtrip()),
        ("structural_screen", screen()),
    ]
}

fn capacity_suite(rng: &mut ChaCha8Rng) -> Vec<(&'static str, Outcome)> {
    let mut props = || -> Outcome {
        let mut worst_homog: f64 = 0.0;
        let mut monotone = true;
        let mut covered = true;
        for _ in 0..30 {
            let g = random_graph(rng, 6);
            let topo = Topology::Wireless(g.clone());
            let lambda: Vec<f64> = (0..g.n()).map(|_| rng.random_range(0.0..0.5)).collect();
            let base = load_factor(&CapacityQuery::for_topology(&topo, lambda.clone())?)?;
            let c = rng.random_range(0.1..4.0);
            let scaled = load_factor(&CapacityQuery::for_topology(&topo, lambda.iter().map(|l| c * l).collect())?)?;
            worst_homog = worst_homog.max((scaled.load - c * base.load).abs());
            let bigger: Vec<f64> = lambda.iter().map(|l| l + rng.random_range(0.0..0.1)).collect();
            monotone &= load_factor(&CapacityQuery::for_topology(&topo, bigger)?)?.load >= base.load - 1e-12;
            let states = topo.state_space(4096)?;
            for (i, &l) in lambda.iter().enumerate() {
                let sum: f64 = base.witness.iter().map(|w| w.alpha * f64::from(states.get(w.state_index)[i])).sum();
                covered &= sum >= l - 1e-9;
            }
        }
        Ok((
            worst_homog <= 1e-8 && monotone && covered,
            format!("homogeneity error {worst_homog:.2e}, monotone={monotone}, witness covers={covered}"),
        ))
    };
    let examples = || -> Outcome {
        let k2 = Topology::Wireless(InterferenceGraph::complete(2)?);
        let a = load_factor(&CapacityQuery::for_topology(&k2, vec![0.4, 0.4])?)?;
        let b = load_factor(&CapacityQuery::for_topology(&k2, vec![0.6, 0.6])?)?;
        let ok = (a.load - 0.8).abs() < 1e-12 && a.strictly_admissible && (b.load - 1.2).abs() < 1e-12 && !b.admissible;
        Ok((ok, format!("K2 loads {} and {}", a.load, b.load)))
    };
    vec![("lp_properties", props()), ("k2_examples", examples())]
}
