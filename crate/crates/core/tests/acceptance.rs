//! Acceptance suite: one PASS/FAIL line per criterion. Reference values come
//! from oracles written here, independent of the library code paths they check.

use std::collections::HashMap;
use std::f64::consts::E;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schednet::analysis::{expm_perturbation_check, free_energy, gibbs_from_potential};
use schednet::chains::{
    conductance, glauber_kernel, glauber_stationary, kernel_norm, lossnet_kernel, lossnet_normalizer, lossnet_stationary,
    matrix_norm, mixing_bound_glauber, mixing_bound_lossnet, uniformized_kernel, ChainKernel, DistributionVector,
};
use schednet::model::{CircuitNetwork, InterferenceGraph, Link, Topology};
use schednet::sim::{replica_map, simulate, Algorithm, SimConfig, Trace};
use schednet::verify::{run_suite, Suite, MASTER_SEED};

/// Pilot at horizon 3e5, seeds 0..10 (`examples/stability_pilot.rs`): the largest
/// last-half mean of Q_max was 6.038 (K2, load 0.5) and 1.580 (one link, two
/// routes, load 0.4). Thresholds are twice those values.
const WIRELESS_STABLE_THRESHOLD: f64 = 12.08;
const CIRCUIT_STABLE_THRESHOLD: f64 = 3.16;

type Criterion<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// Oracles

fn ln_fact(k: u32) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

fn f_oracle(x: f64) -> f64 {
    (x + E).ln().ln()
}

struct Chain {
    states: Vec<Vec<u32>>,
    p: DMatrix<f64>,
    /// Product-form law, normalized.
    pi: Vec<f64>,
}

impl Chain {
    fn index(&self) -> HashMap<Vec<u32>, usize> {
        self.states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()
    }
}

fn glauber_oracle(n: usize, edges: &[(usize, usize)], w: &[f64]) -> Chain {
    let adjacent = |i: usize, j: usize| edges.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
    let states: Vec<Vec<u32>> = (0u32..1 << n)
        .map(|mask| (0..n).map(|i| (mask >> i) & 1).collect::<Vec<u32>>())
        .filter(|s| (0..n).all(|i| (0..n).all(|j| i == j || !(s[i] == 1 && s[j] == 1 && adjacent(i, j)))))
        .collect();
    let idx: HashMap<Vec<u32>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let m = states.len();
    let mut p = DMatrix::zeros(m, m);
    for (a, s) in states.iter().enumerate() {
        for i in 0..n {
            let blocked = (0..n).any(|j| j != i && adjacent(i, j) && s[j] == 1);
            let on = if blocked { 0.0 } else { w[i].exp() / (1.0 + w[i].exp()) };
            let mut up = s.clone();
            up[i] = 1;
            let mut down = s.clone();
            down[i] = 0;
            if on > 0.0 {
                p[(a, idx[&up])] += on / n as f64;
            }
            p[(a, idx[&down])] += (1.0 - on) / n as f64;
        }
    }
    let logs: Vec<f64> = states.iter().map(|s| s.iter().zip(w).map(|(&x, &wi)| x as f64 * wi).sum()).collect();
    Chain { pi: normalize_logs(&logs), states, p }
}

struct Circuit {
    caps: Vec<u32>,
    /// Link indices per route.
    routes: Vec<Vec<usize>>,
}

impl Circuit {
    fn feasible(&self, z: &[u32]) -> bool {
        (0..self.caps.len()).all(|e| {
            let load: u32 = self.routes.iter().zip(z).filter(|(r, _)| r.contains(&e)).map(|(_, &zi)| zi).sum();
            load <= self.caps[e]
        })
    }

    fn network(&self) -> CircuitNetwork {
        let links = self.caps.iter().enumerate().map(|(e, &c)| Link { id: format!("l{e}"), capacity: c }).collect();
        let routes = self.routes.iter().map(|r| r.iter().map(|e| format!("l{e}")).collect()).collect();
        CircuitNetwork::new(links, routes).unwrap()
    }

    fn c_max(&self) -> u32 {
        *self.caps.iter().max().unwrap()
    }
}

fn lossnet_oracle(c: &Circuit, phi: &[f64]) -> Chain {
    let n = c.routes.len();
    let c_max = c.c_max();
    let mut states = Vec::new();
    let total = (c_max + 1).pow(n as u32);
    for code in 0..total {
        let z: Vec<u32> = (0..n).map(|i| (code / (c_max + 1).pow(i as u32)) % (c_max + 1)).collect();
        if c.feasible(&z) {
            states.push(z);
        }
    }
    states.sort();
    let idx: HashMap<Vec<u32>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let r: f64 = phi.iter().sum::<f64>() + c_max as f64;
    let m = states.len();
    let mut p = DMatrix::zeros(m, m);
    for (a, z) in states.iter().enumerate() {
        let mut stay = 1.0;
        for i in 0..n {
            let mut up = z.clone();
            up[i] += 1;
            if c.feasible(&up) {
                let q = phi[i] / r / n as f64;
                p[(a, idx[&up])] += q;
                stay -= q;
            }
            if z[i] > 0 {
                let mut down = z.clone();
                down[i] -= 1;
                let q = z[i] as f64 / r / n as f64;
                p[(a, idx[&down])] += q;
                stay -= q;
            }
        }
        p[(a, a)] += stay;
    }
    let logs: Vec<f64> =
        states.iter().map(|z| z.iter().zip(phi).map(|(&k, &f)| k as f64 * f.ln() - ln_fact(k)).sum()).collect();
    Chain { pi: normalize_logs(&logs), states, p }
}

fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Stationary vector as the null vector of `P^T - I` from a full SVD.
fn eigensolve_stationary(p: &DMatrix<f64>) -> Vec<f64> {
    let m = p.nrows();
    let a = p.transpose() - DMatrix::<f64>::identity(m, m);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let k = (0..m).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap();
    let v: Vec<f64> = v_t.row(k).iter().copied().collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Eigenvalues of a kernel reversible with respect to `pi`, descending.
fn reversible_spectrum(p: &DMatrix<f64>, pi: &[f64]) -> Vec<f64> {
    let m = pi.len();
    let s = DMatrix::from_fn(m, m, |i, j| pi[i].sqrt() * p[(i, j)] / pi[j].sqrt());
    let sym = (&s + s.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// `max |lambda|` over every eigenvalue but the unit one.
fn lambda_max(spec: &[f64]) -> f64 {
    spec.iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max)
}

/// `min_{pi(S) <= 1/2} Q(S, S^c) / (pi(S) pi(S^c))`, enumerating every subset.
fn conductance_oracle(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let m = pi.len();
    let mut best = f64::INFINITY;
    for mask in 1u64..(1u64 << m) - 1 {
        let ps: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| pi[i]).sum();
        if ps > 0.5 + 1e-15 {
            continue;
        }
        let mut q = 0.0;
        for i in (0..m).filter(|&i| mask >> i & 1 == 1) {
            for j in (0..m).filter(|&j| mask >> j & 1 == 0) {
                q += pi[i] * p[(i, j)];
            }
        }
        best = best.min(q / (ps * (1.0 - ps)));
    }
    best
}

/// Matrix exponential by Taylor series after scaling to norm below 1/64.
fn expm_oracle(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>();
    let mut s = 0;
    while norm / 2f64.powi(s) > 1.0 / 64.0 {
        s += 1;
    }
    let b = a / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn row_sum_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows()).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Instances

struct WirelessInstance {
    n: usize,
    edges: Vec<(usize, usize)>,
    w: Vec<f64>,
}

struct CircuitInstance {
    circuit: Circuit,
    w: Vec<f64>,
}

fn wireless_instances(rng: &mut ChaCha8Rng, count: usize) -> Vec<WirelessInstance> {
    (0..count)
        .map(|k| {
            // Cover the extremes first: edgeless and complete graphs on five nodes.
            let n = if k < 2 { 5 } else { rng.random_range(1..=5) };
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let keep = match k {
                        0 => false,
                        1 => true,
                        _ => rng.random_bool(0.5),
                    };
                    if keep {
                        edges.push((i, j));
                    }
                }
            }
            let w = (0..n).map(|_| rng.random_range(0.0..=3.0)).collect();
            WirelessInstance { n, edges, w }
        })
        .collect()
}

fn circuit_instances(rng: &mut ChaCha8Rng, count: usize) -> Vec<CircuitInstance> {
    // Largest admissible space: four disjoint routes on capacity-3 links, |X| = 256.
    let widest = Circuit { caps: vec![3; 4], routes: (0..4).map(|e| vec![e]).collect() };
    let mut out = vec![CircuitInstance { circuit: widest, w: (0..4).map(|_| rng.random_range(0.0..=3.0)).collect() }];
    while out.len() < count {
        let links = rng.random_range(1..=3);
        let caps: Vec<u32> = (0..links).map(|_| rng.random_range(1..=3)).collect();
        let routes: Vec<Vec<usize>> = (0..rng.random_range(1..=4))
            .map(|_| {
                let mut r: Vec<usize> = (0..links).filter(|_| rng.random_bool(0.5)).collect();
                if r.is_empty() {
                    r.push(rng.random_range(0..links));
                }
                r
            })
            .collect();
        let circuit = Circuit { caps, routes };
        let c_max = circuit.c_max();
        let n = circuit.routes.len();
        let count_states =
            (0..(c_max + 1).pow(n as u32)).filter(|&code| {
                let z: Vec<u32> = (0..n).map(|i| (code / (c_max + 1).pow(i as u32)) % (c_max + 1)).collect();
                circuit.feasible(&z)
            }).count();
        if count_states > 256 {
            continue;
        }
        let w = (0..n).map(|_| rng.random_range(0.0..=3.0)).collect();
        out.push(CircuitInstance { circuit, w });
    }
    out
}

fn library_kernel_matches(chain: &Chain, k: &ChainKernel) -> f64 {
    let idx = chain.index();
    let mut worst: f64 = 0.0;
    for (a, sa) in k.states().states().iter().enumerate() {
        for (b, sb) in k.states().states().iter().enumerate() {
            worst = worst.max((k.matrix()[(a, b)] - chain.p[(idx[sa], idx[sb])]).abs());
        }
    }
    worst
}

fn reorder(lib: &DistributionVector, lib_states: &[Vec<u32>], chain: &Chain) -> Vec<f64> {
    let idx = chain.index();
    let mut out = vec![0.0; chain.states.len()];
    for (s, &p) in lib_states.iter().zip(lib.probs()) {
        out[idx[s]] = p;
    }
    out
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Criteria

fn criterion_1(wl: &[WirelessInstance], cs: &[CircuitInstance]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_kernel: f64 = 0.0;
    let mut max_states = (0, 0);
    for inst in wl {
        let g = InterferenceGraph::new(inst.n, inst.edges.clone()).unwrap();
        let chain = glauber_oracle(inst.n, &inst.edges, &inst.w);
        let k = glauber_kernel(&g, &inst.w).unwrap();
        worst_kernel = worst_kernel.max(library_kernel_matches(&chain, &k));
        let lib = glauber_stationary(&g, &inst.w).unwrap();
        let lib = reorder(&lib, k.states().states(), &chain);
        worst = worst.max(sup(&lib, &eigensolve_stationary(&chain.p)));
        max_states.0 = max_states.0.max(chain.states.len());
    }
    for inst in cs {
        let phi: Vec<f64> = inst.w.iter().map(|w| w.exp()).collect();
        let net = inst.circuit.network();
        let chain = lossnet_oracle(&inst.circuit, &phi);
        let k = lossnet_kernel(&net, &phi).unwrap();
        worst_kernel = worst_kernel.max(library_kernel_matches(&chain, &k));
        let lib = lossnet_stationary(&net, &phi).unwrap();
        let lib = reorder(&lib, k.states().states(), &chain);
        worst = worst.max(sup(&lib, &eigensolve_stationary(&chain.p)));
        max_states.1 = max_states.1.max(chain.states.len());
    }
    outcome(
        worst <= 1e-10 && worst_kernel <= 1e-14,
        format!(
            "{} wireless (|I(G)| <= {}), {} circuit (|X| <= {}); sup |product form - eigensolve| = {worst:.2e}; kernel mismatch {worst_kernel:.1e}",
            wl.len(),
            max_states.0,
            cs.len(),
            max_states.1
        ),
    )
}

fn glauber_log_gaps(n: usize, w_max: f64) -> (f64, f64) {
    let nf = n as f64;
    let ln2 = 2f64.ln();
    let kernel = -(2.0 * nf.ln() + (2.0 * nf + 3.0) * ln2 + 2.0 * (nf + 1.0) * w_max);
    let unif = -(nf.ln() + (2.0 * nf + 4.0) * ln2 + 2.0 * (nf + 1.0) * w_max);
    (kernel, unif)
}

fn lossnet_log_gaps(n: usize, c: u32, w_max: f64) -> (f64, f64) {
    let nf = n as f64;
    let cf = c as f64;
    let common = (2.0 * nf * cf + 2.0 * nf + 2.0) * cf.ln() + 2.0 * (nf * cf + 1.0) * w_max;
    (-(8f64.ln() + 4.0 * nf.ln() + common), -(16f64.ln() + 3.0 * nf.ln() + common))
}

fn criterion_2(wl: &[WirelessInstance], cs: &[CircuitInstance]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_lib: f64 = 0.0;
    let mut cheeger_checked = 0;
    let mut cheeger_worst = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut check = |label: String, chain: &Chain, k: &ChainKernel, rate: f64, gaps: (f64, f64), lib_gaps: (f64, f64)| {
        let spec = reversible_spectrum(&chain.p, &chain.pi);
        let norm = lambda_max(&spec);
        // exp(rate (P - I)) has eigenvalues exp(rate (lambda - 1)); the largest non-unit one is its norm.
        let unif = spec.iter().skip(1).map(|l| (rate * (l - 1.0)).exp()).fold(0.0, f64::max);
        let lib_norm = kernel_norm(k).unwrap();
        let lib_unif = kernel_norm(&uniformized_kernel(k, rate).unwrap()).unwrap();
        worst_lib = worst_lib.max((lib_norm - norm).abs()).max((lib_unif - unif).abs());
        worst_lib = worst_lib.max((lib_gaps.0 - gaps.0).abs()).max((lib_gaps.1 - gaps.1).abs());
        let ok_kernel = 1.0 - norm >= gaps.0.exp();
        let ok_unif = 1.0 - unif >= gaps.1.exp();
        min_ratio = min_ratio.min(((1.0 - norm) / gaps.0.exp()).min((1.0 - unif) / gaps.1.exp()));
        if !(ok_kernel && ok_unif) {
            failures.push(format!("{label}: norm {norm} / unif {unif}"));
        }
        if chain.states.len() <= 24 {
            cheeger_checked += 1;
            let phi = conductance_oracle(&chain.p, &chain.pi);
            let lib_phi = conductance(k).unwrap();
            worst_lib = worst_lib.max((lib_phi - phi).abs());
            let slack = 1.0 - phi * phi / 2.0 - norm;
            cheeger_worst = cheeger_worst.min(slack);
            if slack < -1e-12 {
                failures.push(format!("{label}: Cheeger lambda_max {norm:.6} > 1 - Phi^2/2 = {:.6}", 1.0 - phi * phi / 2.0));
            }
        }
    };
    for (t, inst) in wl.iter().enumerate() {
        let g = InterferenceGraph::new(inst.n, inst.edges.clone()).unwrap();
        let chain = glauber_oracle(inst.n, &inst.edges, &inst.w);
        let k = glauber_kernel(&g, &inst.w).unwrap();
        let w_max = inst.w.iter().copied().fold(0.0, f64::max);
        let lib = mixing_bound_glauber(inst.n, w_max).unwrap();
        check(format!("wireless #{t}"), &chain, &k, inst.n as f64, glauber_log_gaps(inst.n, w_max), (lib.kernel.log_gap, lib.uniformized.log_gap));
    }
    for (t, inst) in cs.iter().enumerate() {
        let phi: Vec<f64> = inst.w.iter().map(|w| w.exp()).collect();
        let net = inst.circuit.network();
        let chain = lossnet_oracle(&inst.circuit, &phi);
        let k = lossnet_kernel(&net, &phi).unwrap();
        let w_max = inst.w.iter().copied().fold(0.0, f64::max);
        let n = inst.circuit.routes.len();
        let r = phi.iter().sum::<f64>() + inst.circuit.c_max() as f64;
        assert!((lossnet_normalizer(&net, &phi) - r).abs() < 1e-12);
        let lib = mixing_bound_lossnet(n, inst.circuit.c_max(), w_max).unwrap();
        check(
            format!("circuit #{t}"),
            &chain,
            &k,
            n as f64 * r,
            lossnet_log_gaps(n, inst.circuit.c_max(), w_max),
            (lib.kernel.log_gap, lib.uniformized.log_gap),
        );
    }
    let pass = failures.is_empty() && worst_lib <= 1e-9;
    let mut detail = format!(
        "{} instances; min (1 - norm)/gap-bound {min_ratio:.3e}; Cheeger on {cheeger_checked} with |Omega| <= 24, min slack {cheeger_worst:.3e}; library vs oracle {worst_lib:.1e}",
        wl.len() + cs.len()
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; {} violations, first: {}", failures.len(), failures[0]));
    }
    outcome(pass, detail)
}

/// Metropolis kernel for `pi` with a random symmetric proposal.
fn random_reversible(rng: &mut ChaCha8Rng, pi: &[f64]) -> DMatrix<f64> {
    let m = pi.len();
    let mut p = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let s: f64 = rng.random_range(0.0..1.0) / m as f64;
            p[(i, j)] = s * (pi[j] / pi[i]).min(1.0);
            p[(j, i)] = s * (pi[i] / pi[j]).min(1.0);
        }
    }
    for i in 0..m {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| p[(i, j)]).sum();
        p[(i, i)] = 1.0 - off;
    }
    p
}

fn criterion_3(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = [0f64; 4];
    for _ in 0..100 {
        let m = rng.random_range(2..=10);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let a = random_reversible(rng, &pi);
        let b = random_reversible(rng, &pi);
        let c: f64 = rng.random_range(-3.0..3.0);
        let na = matrix_norm(&a, &pi).unwrap();
        let nb = matrix_norm(&b, &pi).unwrap();
        worst[0] = worst[0].max(matrix_norm(&(&a + &b), &pi).unwrap() - na - nb);
        worst[1] = worst[1].max((matrix_norm(&(&a * c), &pi).unwrap() - c.abs() * na).abs());
        worst[2] = worst[2].max(matrix_norm(&(&a * &b), &pi).unwrap() - na * nb);
        worst[3] = worst[3].max((na - lambda_max(&reversible_spectrum(&a, &pi))).abs());
    }
    outcome(
        worst.iter().all(|&v| v <= 1e-9),
        format!(
            "100 pairs; triangle excess {:.1e}, homogeneity error {:.1e}, submultiplicative excess {:.1e}, |norm - lambda_max| {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn random_distribution(rng: &mut ChaCha8Rng, m: usize) -> DistributionVector {
    let mut w: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..1.0) }).collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    DistributionVector::from_weights(w).unwrap()
}

fn criterion_4(rng: &mut ChaCha8Rng) -> Outcome {
    let mut min_gap = f64::INFINITY;
    let mut min_bound = f64::INFINITY;
    let mut worst_log_z: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.random_range(1..=64);
        let t: Vec<f64> = (0..m).map(|_| rng.random_range(-6.0..6.0)).collect();
        let nu = gibbs_from_potential(&t).unwrap();
        let f_nu = free_energy(&t, &nu).unwrap();
        let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = top + t.iter().map(|x| (x - top).exp()).sum::<f64>().ln();
        worst_log_z = worst_log_z.max((f_nu - log_z).abs());
        for _ in 0..100 {
            let mu = random_distribution(rng, m);
            let f_mu: f64 = mu.probs().iter().zip(&t).filter(|(&p, _)| p > 0.0).map(|(&p, &x)| p * x - p * p.ln()).sum();
            min_gap = min_gap.min(f_nu - f_mu);
        }
        let e_t: f64 = nu.probs().iter().zip(&t).map(|(p, x)| p * x).sum();
        min_bound = min_bound.min(e_t - (top - (m as f64).ln()));
    }
    outcome(
        min_gap >= -1e-9 && min_bound >= -1e-9 && worst_log_z <= 1e-9,
        format!("50 potentials x 100 laws; min F(nu) - F(mu) {min_gap:.3e}; min E[T] - (max T - log|Omega|) {min_bound:.3e}; |F(nu) - log Z| {worst_log_z:.1e}"),
    )
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Outcome {
    let mut failures = 0;
    let mut worst_lhs: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let p1 = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        let p2 = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        let lhs = row_sum_norm(&(expm_oracle(&p1) - expm_oracle(&p2)));
        let m = row_sum_norm(&p1).max(row_sum_norm(&p2));
        let rhs = (n as f64 * m).exp() * row_sum_norm(&(&p1 - &p2));
        let lib = expm_perturbation_check(&p1, &p2).unwrap();
        worst_lhs = worst_lhs.max((lib.lhs - lhs).abs() / lhs.max(1.0));
        failures += usize::from(lhs > rhs + 1e-9 || !lib.ok);
        max_ratio = max_ratio.max(lhs / rhs);
    }
    outcome(
        failures == 0 && worst_lhs <= 1e-9,
        format!("200 pairs, N <= 6; {failures} violations; max lhs/rhs {max_ratio:.3e}; library lhs error {worst_lhs:.1e}"),
    )
}

fn wireless_feasible(edges: &[(usize, usize)], x: &[u32]) -> bool {
    x.iter().all(|&v| v <= 1) && edges.iter().all(|&(a, b)| x[a] + x[b] <= 1)
}

fn conservation_error(trace: &Trace) -> f64 {
    let first = &trace.snapshots[0];
    let mut worst: f64 = 0.0;
    for pair in trace.snapshots.windows(2) {
        for base in [first, &pair[0]] {
            let cur = &pair[1];
            for i in 0..cur.q.len() {
                let a = (cur.arrivals[i] - base.arrivals[i]) as f64;
                let d = cur.served[i] - base.served[i];
                worst = worst.max((cur.q[i] - (base.q[i] + a - d)).abs());
            }
        }
    }
    worst
}

fn criterion_6() -> Outcome {
    let seeds: Vec<u64> = (1..=10).collect();
    let edges = vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
    let g = InterferenceGraph::new(4, edges.clone()).unwrap();
    let wcfg = SimConfig::new(Topology::Wireless(g), vec![0.15, 0.1, 0.15, 0.1], 1e4, 0);
    let circuit = Circuit { caps: vec![2, 1], routes: vec![vec![0], vec![0, 1], vec![1]] };
    let ccfg = SimConfig::new(Topology::Circuit(circuit.network()), vec![0.5, 0.2, 0.3], 1e4, 0);

    let w_stats = replica_map(&wcfg, &seeds, |tr| {
        let bad = tr.snapshots.iter().filter(|s| !wireless_feasible(&edges, &s.x)).count();
        let increasing = tr.snapshots.windows(2).all(|w| w[1].t > w[0].t);
        (tr.snapshots.len(), bad, conservation_error(&tr), increasing)
    })
    .unwrap();
    let c_stats = replica_map(&ccfg, &seeds, |tr| {
        let bad = tr.snapshots.iter().filter(|s| !circuit.feasible(&s.x)).count();
        let increasing = tr.snapshots.windows(2).all(|w| w[1].t > w[0].t);
        (tr.snapshots.len(), bad, conservation_error(&tr), increasing)
    })
    .unwrap();
    let snaps: usize = w_stats.iter().chain(&c_stats).map(|s| s.0).sum();
    let infeasible: usize = w_stats.iter().chain(&c_stats).map(|s| s.1).sum();
    let w_err = w_stats.iter().map(|s| s.2).fold(0.0, f64::max);
    let c_err = c_stats.iter().map(|s| s.2).fold(0.0, f64::max);
    let ordered = w_stats.iter().chain(&c_stats).all(|s| s.3);
    outcome(
        infeasible == 0 && w_err <= 1e-9 && c_err == 0.0 && ordered,
        format!("{snaps} snapshots over 20 runs; {infeasible} infeasible; wireless conservation error {w_err:.1e}; circuit error {c_err}"),
    )
}

fn frozen_tv(cfg: SimConfig, pi: &[f64], states: &[Vec<u32>], t: f64, replicas: u64) -> f64 {
    let seeds: Vec<u64> = (0..replicas).collect();
    let xs = replica_map(&cfg, &seeds, |tr| tr.snapshot_at(t).unwrap().x.clone()).unwrap();
    let mut counts = vec![0.0; states.len()];
    for x in &xs {
        counts[states.iter().position(|s| s == x).expect("state in space")] += 1.0;
    }
    let emp: Vec<f64> = counts.iter().map(|c| c / replicas as f64).collect();
    tv(&emp, pi)
}

fn criterion_7() -> Outcome {
    let replicas = 10_000u64;
    let budget = 0.05 + 3.0 * (3.0 / replicas as f64).sqrt();
    let states = vec![vec![0, 0], vec![0, 1], vec![1, 0]];

    // f(e^(e^2) - e) = 2.
    let q_wireless = (E * E).exp() - E;
    let floor = f_oracle(q_wireless).sqrt();
    let w = [f_oracle(q_wireless).max(floor), f_oracle(0.0).max(floor)];
    let pi_w = normalize_logs(&[0.0, w[1], w[0]]);
    let mut wcfg = SimConfig::new(Topology::Wireless(InterferenceGraph::complete(2).unwrap()), vec![0.0, 0.0], 100.0, 0);
    wcfg.frozen = true;
    wcfg.initial_queues = Some(vec![q_wireless, 0.0]);
    wcfg.sample_every = 50.0;
    let tv_w = frozen_tv(wcfg, &pi_w, &states, 50.0 * 2.0, replicas);

    // Circuit queues are whole flows: the nearest integer to e^(e^2) - e.
    let q_circuit = q_wireless.round();
    let floor = f_oracle(q_circuit).sqrt();
    let w = [f_oracle(q_circuit).max(floor), f_oracle(0.0).max(floor)];
    let pi_c = normalize_logs(&[0.0, w[1], w[0]]);
    let net = CircuitNetwork::single_link(2, 1).unwrap();
    let mut ccfg = SimConfig::new(Topology::Circuit(net), vec![0.0, 0.0], 100.0, 0);
    ccfg.frozen = true;
    ccfg.initial_queues = Some(vec![q_circuit, 0.0]);
    ccfg.sample_every = 50.0;
    let tv_c = frozen_tv(ccfg, &pi_c, &states, 50.0 * 2.0, replicas);

    outcome(
        tv_w <= budget && tv_c <= budget,
        format!("t = 100, 10^4 replicas; TV wireless {tv_w:.4}, circuit {tv_c:.4}; threshold {budget:.4}"),
    )
}

fn half_means(tr: &Trace) -> (f64, f64) {
    let h = tr.horizon / 2.0;
    let mean = |lo: f64, hi: f64| {
        let v: Vec<f64> = tr
            .snapshots
            .iter()
            .filter(|s| s.t >= lo && s.t <= hi)
            .map(|s| s.q.iter().copied().fold(0.0, f64::max))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    (mean(0.0, h), mean(h, tr.horizon))
}

fn criterion_8() -> Outcome {
    let horizon = 1e5;
    let seeds: Vec<u64> = (0..10).collect();
    let k2 = Topology::Wireless(InterferenceGraph::complete(2).unwrap());
    let link = Topology::Circuit(CircuitNetwork::single_link(2, 1).unwrap());
    let run = |topo: &Topology, lambda: f64| {
        replica_map(&SimConfig::new(topo.clone(), vec![lambda; 2], horizon, 0), &seeds, |tr| half_means(&tr)).unwrap()
    };
    let w_stable = run(&k2, 0.25);
    let c_stable = run(&link, 0.2);
    let w_over = run(&k2, 0.75);
    let c_over = run(&link, 0.75);
    let w_max = w_stable.iter().map(|m| m.1).fold(0.0, f64::max);
    let c_max = c_stable.iter().map(|m| m.1).fold(0.0, f64::max);
    let growth = |runs: &[(f64, f64)]| runs.iter().map(|(a, b)| b / a).fold(f64::INFINITY, f64::min);
    let (w_growth, c_growth) = (growth(&w_over), growth(&c_over));
    outcome(
        w_max < WIRELESS_STABLE_THRESHOLD && c_max < CIRCUIT_STABLE_THRESHOLD && w_growth >= 2.0 && c_growth >= 2.0,
        format!(
            "stable last-half mean Q_max: wireless {w_max:.3} (< {WIRELESS_STABLE_THRESHOLD}), circuit {c_max:.3} (< {CIRCUIT_STABLE_THRESHOLD}); overload half-to-half growth: wireless {w_growth:.2}x, circuit {c_growth:.2}x"
        ),
    )
}

fn trace_bytes(cfg: &SimConfig) -> String {
    let tr = simulate(cfg).unwrap();
    format!("{}\n{}\n{}", tr.to_csv(), tr.summary_json(), tr.event_log_csv())
}

fn criterion_9() -> Outcome {
    let mut configs = Vec::new();
    let g = InterferenceGraph::cycle(5).unwrap();
    let mut w = SimConfig::new(Topology::Wireless(g.clone()), vec![0.2; 5], 2000.0, 77);
    w.log_events = true;
    w.sample_every = 0.5;
    configs.push(w.clone());
    let mut mw = w.clone();
    mw.algorithm = Algorithm::Mw;
    configs.push(mw.clone());
    mw.algorithm = Algorithm::MwF;
    configs.push(mw);
    let mut c = SimConfig::new(Topology::Circuit(CircuitNetwork::single_link(3, 2).unwrap()), vec![0.3; 3], 2000.0, 78);
    c.log_events = true;
    configs.push(c);

    let mut identical = configs.iter().all(|cfg| trace_bytes(cfg) == trace_bytes(cfg));
    let forward = replica_map(&w, &[3, 1, 2], |tr| tr.to_csv()).unwrap();
    let sorted = replica_map(&w, &[1, 2, 3], |tr| tr.to_csv()).unwrap();
    identical &= forward == sorted;
    let verify_same = run_suite(Suite::All, MASTER_SEED).to_string() == run_suite(Suite::All, MASTER_SEED).to_string();
    outcome(
        identical && verify_same,
        format!("{} simulate configs and replica merge byte-identical: {identical}; verify all reproducible: {verify_same}", configs.len()),
    )
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_901);
    let wl = wireless_instances(&mut rng, 24);
    let cs = circuit_instances(&mut rng, 24);

    let criteria: Vec<(&str, Criterion)> = vec![
        ("product-form stationary laws", Box::new(|| criterion_1(&wl, &cs))),
        ("mixing bounds and Cheeger", Box::new(|| criterion_2(&wl, &cs))),
        ("matrix-norm properties", Box::new({
            let mut r = ChaCha8Rng::seed_from_u64(3);
            move || criterion_3(&mut r)
        })),
        ("free-energy variational principle", Box::new({
            let mut r = ChaCha8Rng::seed_from_u64(4);
            move || criterion_4(&mut r)
        })),
        ("matrix-exponential perturbation bound", Box::new({
            let mut r = ChaCha8Rng::seed_from_u64(5);
            move || criterion_5(&mut r)
        })),
        ("simulation conservation and feasibility", Box::new(criterion_6)),
        ("frozen-queue mixing", Box::new(criterion_7)),
        ("stability smoke test", Box::new(criterion_8)),
        ("determinism", Box::new(criterion_9)),
    ];

    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!("criterion {} [{tag}] {name}: {} ({:.2} s)", k + 1, result.detail, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
