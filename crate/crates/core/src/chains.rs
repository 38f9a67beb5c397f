//! Exact finite Markov chains over enumerated schedule spaces.
//!
//! Two reversible families are built here:
//!
//! * Glauber dynamics `GD(W)` on the independent sets of an interference
//!   graph, stationary law `pi(sigma) ∝ exp(W · sigma)`;
//! * the discrete-time loss network `LN(phi)` on the feasible allocations of
//!   a circuit network, stationary law `pi(z) ∝ prod_i phi_i^z_i / z_i!`.
//!
//! Alongside the kernels live the spectral tools used to check mixing
//! behaviour: the `pi`-weighted operator norm on mean-zero functions, exact
//! conductance, uniformization `exp(rate (P - I))`, and the closed-form gap
//! bounds for both families (kept in log form since they underflow quickly).

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::model::{CircuitNetwork, InterferenceGraph, StateSpace, DEFAULT_ENUMERATION_CAP};

/// Largest state space for exhaustive conductance.
pub const MAX_EXHAUSTIVE_CUT_STATES: usize = 24;

const ROW_SUM_TOL: f64 = 1e-12;

/// A probability vector over an ordered state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DistributionVector(Vec<f64>);

impl DistributionVector {
    /// Wraps `probs`, requiring non-negative entries summing to 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, 1e-12)
    }

    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyVector);
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidArgument("weights must have a positive finite sum".into()));
        }
        Self::with_tolerance(weights.into_iter().map(|w| w / total).collect(), 1e-9)
    }

    /// Normalizes `exp(log_weights)` with max subtraction.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::EmptyVector);
        }
        let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::InvalidArgument("log-weights must be finite".into()));
        }
        let w: Vec<f64> = log_weights.iter().map(|&l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(Self(w.into_iter().map(|v| v / z).collect()))
    }

    pub fn point_mass(len: usize, k: usize) -> Self {
        let mut p = vec![0.0; len];
        p[k] = 1.0;
        Self(p)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// A row-stochastic matrix over an enumerated state space.
#[derive(Debug, Clone)]
pub struct ChainKernel {
    states: StateSpace,
    p: DMatrix<f64>,
    pi: Option<DistributionVector>,
}

impl ChainKernel {
    /// Wraps a transition matrix, checking shape and stochasticity.
    pub fn new(states: StateSpace, p: DMatrix<f64>) -> Result<Self> {
        let m = states.len();
        if p.nrows() != m || p.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: p.nrows() });
        }
        if p.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument("negative transition probability".into()));
        }
        if let Some(r) = p.row_iter().position(|row| (row.sum() - 1.0).abs() > ROW_SUM_TOL) {
            return Err(Error::InvalidArgument(format!("row {r} does not sum to 1")));
        }
        Ok(Self { states, p, pi: None })
    }

    /// Builds a kernel over anonymous states `0..m` (labels are the indices).
    pub fn from_matrix(p: DMatrix<f64>) -> Result<Self> {
        let states = StateSpace::new((0..p.nrows() as u32).map(|k| vec![k]).collect());
        Self::new(states, p)
    }

    /// Attaches a stationary distribution after checking `pi P = pi` within 1e-10.
    pub fn with_stationary(mut self, pi: DistributionVector) -> Result<Self> {
        if pi.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: pi.len() });
        }
        self.pi = Some(pi);
        let residual = self.stationarity_residual().unwrap_or(f64::INFINITY);
        if residual > 1e-10 {
            return Err(Error::InvalidArgument(format!("pi P != pi (residual {residual:e})")));
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> Option<&DistributionVector> {
        self.pi.as_ref()
    }

    /// `max_j |(pi P)_j - pi_j|`, when a stationary distribution is attached.
    pub fn stationarity_residual(&self) -> Option<f64> {
        let pi = self.pi.as_ref()?;
        let row = DVector::from_column_slice(pi.probs()).transpose() * &self.p;
        Some(row.iter().zip(pi.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// `max_{i,j} |pi_i P_ij - pi_j P_ji|`, when a stationary distribution is attached.
    pub fn detailed_balance_error(&self) -> Option<f64> {
        let pi = self.pi.as_ref()?.probs();
        let m = self.len();
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in i + 1..m {
                worst = worst.max((pi[i] * self.p[(i, j)] - pi[j] * self.p[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// Stationary distribution, preferring the attached one.
    pub fn stationary_or_solve(&self) -> Result<DistributionVector> {
        match &self.pi {
            Some(pi) => Ok(pi.clone()),
            None => stationary_from_kernel(self),
        }
    }

    /// CSV with a header of state labels, one row per source state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state");
        for k in 0..self.len() {
            write!(out, ",{}", self.states.label(k)).unwrap();
        }
        out.push('\n');
        for (k, row) in self.p.row_iter().enumerate() {
            out.push_str(&self.states.label(k));
            for v in row.iter() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// CSV `state,prob` for a distribution over `states`.
pub fn distribution_csv(states: &StateSpace, pi: &DistributionVector) -> String {
    let mut out = String::from("state,prob\n");
    for (k, p) in pi.probs().iter().enumerate() {
        writeln!(out, "{},{p}", states.label(k)).unwrap();
    }
    out
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if let Some(&bad) = w.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::NegativeInput(bad));
    }
    Ok(())
}

/// Probability `exp(w) / (1 + exp(w))` without overflow.
pub fn activation_probability(w: f64) -> f64 {
    1.0 / (1.0 + (-w).exp())
}

/// Transition matrix of Glauber dynamics `GD(W)` on `I(G)`.
pub fn glauber_kernel(g: &InterferenceGraph, w: &[f64]) -> Result<ChainKernel> {
    glauber_kernel_with_cap(g, w, DEFAULT_ENUMERATION_CAP)
}

pub fn glauber_kernel_with_cap(g: &InterferenceGraph, w: &[f64], cap: usize) -> Result<ChainKernel> {
    check_weights(w, g.n())?;
    let states = StateSpace::new(crate::model::enumerate_independent_sets_with_cap(g, cap)?);
    let m = states.len();
    let n = g.n();
    let pick = 1.0 / n as f64;
    let mut p = DMatrix::<f64>::zeros(m, m);
    let mut next = vec![0u32; n];
    for a in 0..m {
        let sigma = states.get(a);
        for i in 0..n {
            next.copy_from_slice(sigma);
            if g.blocked(i, sigma) {
                next[i] = 0;
                p[(a, states.index_of(&next).expect("closed under removal"))] += pick;
            } else {
                let on = activation_probability(w[i]);
                next[i] = 1;
                p[(a, states.index_of(&next).expect("free node can activate"))] += pick * on;
                next[i] = 0;
                p[(a, states.index_of(&next).expect("closed under removal"))] += pick * (1.0 - on);
            }
        }
    }
    let pi = glauber_stationary_over(&states, w)?;
    ChainKernel::new(states, p)?.with_stationary(pi)
}

/// Product-form stationary law `exp(W · sigma) / Z` of `GD(W)`.
pub fn glauber_stationary(g: &InterferenceGraph, w: &[f64]) -> Result<DistributionVector> {
    check_weights(w, g.n())?;
    let states = StateSpace::new(crate::model::enumerate_independent_sets(g)?);
    glauber_stationary_over(&states, w)
}

fn glauber_stationary_over(states: &StateSpace, w: &[f64]) -> Result<DistributionVector> {
    let logs: Vec<f64> = states
        .states()
        .iter()
        .map(|s| s.iter().zip(w).map(|(&x, &wi)| f64::from(x) * wi).sum())
        .collect();
    DistributionVector::from_log_weights(&logs)
}

fn check_rates(phi: &[f64], n: usize) -> Result<()> {
    if phi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi.len() });
    }
    if phi.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("loss network rates must be positive".into()));
    }
    Ok(())
}

/// Normalizer `R = sum_i phi_i + C_max` of the discrete loss-network chain.
pub fn lossnet_normalizer(net: &CircuitNetwork, phi: &[f64]) -> f64 {
    phi.iter().sum::<f64>() + f64::from(net.c_max())
}

/// Transition matrix of the loss-network chain `LN(phi)` on `X`.
pub fn lossnet_kernel(net: &CircuitNetwork, phi: &[f64]) -> Result<ChainKernel> {
    lossnet_kernel_with_cap(net, phi, DEFAULT_ENUMERATION_CAP)
}

pub fn lossnet_kernel_with_cap(net: &CircuitNetwork, phi: &[f64], cap: usize) -> Result<ChainKernel> {
    check_rates(phi, net.n())?;
    let states = StateSpace::new(crate::model::enumerate_allocations_with_cap(net, cap)?);
    let m = states.len();
    let n = net.n();
    let r = lossnet_normalizer(net, phi);
    let pick = 1.0 / n as f64;
    let mut p = DMatrix::<f64>::zeros(m, m);
    let mut next = vec![0u32; n];
    for a in 0..m {
        let z = states.get(a);
        let mut stay = 1.0;
        for i in 0..n {
            if net.admits(z, i) {
                next.copy_from_slice(z);
                next[i] += 1;
                let prob = pick * phi[i] / r;
                p[(a, states.index_of(&next).expect("admissible step stays feasible"))] += prob;
                stay -= prob;
            }
            if z[i] > 0 {
                next.copy_from_slice(z);
                next[i] -= 1;
                let prob = pick * f64::from(z[i]) / r;
                p[(a, states.index_of(&next).expect("departure stays feasible"))] += prob;
                stay -= prob;
            }
        }
        p[(a, a)] += stay;
    }
    let pi = lossnet_stationary_over(&states, phi)?;
    ChainKernel::new(states, p)?.with_stationary(pi)
}

/// Product-form stationary law `prod_i phi_i^z_i / z_i!` of `LN(phi)`.
pub fn lossnet_stationary(net: &CircuitNetwork, phi: &[f64]) -> Result<DistributionVector> {
    check_rates(phi, net.n())?;
    let states = StateSpace::new(crate::model::enumerate_allocations(net)?);
    lossnet_stationary_over(&states, phi)
}

/// `ln(k!)` by direct summation; arguments here never exceed a few dozen.
pub fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| f64::from(j).ln()).sum()
}

fn lossnet_stationary_over(states: &StateSpace, phi: &[f64]) -> Result<DistributionVector> {
    let logs: Vec<f64> = states
        .states()
        .iter()
        .map(|z| {
            z.iter()
                .zip(phi)
                .map(|(&k, &r)| f64::from(k) * r.ln() - ln_factorial(k))
                .sum()
        })
        .collect();
    DistributionVector::from_log_weights(&logs)
}

fn reachable(m: usize, adj: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    let mut level = vec![None; m];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for (v, lv) in level.iter_mut().enumerate() {
            if lv.is_none() && adj(u, v) {
                *lv = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Period of an irreducible chain; `Err(ReducibleChain)` if not irreducible.
pub fn period(p: &DMatrix<f64>) -> Result<usize> {
    let m = p.nrows();
    let forward = reachable(m, |u, v| p[(u, v)] > 0.0);
    let backward = reachable(m, |u, v| p[(v, u)] > 0.0);
    if forward.iter().chain(&backward).any(Option::is_none) {
        return Err(Error::ReducibleChain);
    }
    let mut d = 0;
    for u in 0..m {
        for v in 0..m {
            if p[(u, v)] > 0.0 {
                let lu = forward[u].unwrap() as isize;
                let lv = forward[v].unwrap() as isize;
                d = gcd(d, (lu + 1 - lv).unsigned_abs());
            }
        }
    }
    Ok(d)
}

/// Unique stationary distribution of an irreducible aperiodic kernel.
///
/// Solves `pi (P - I) = 0, sum pi = 1` by LU, then polishes with a few
/// multiplications until the residual is below 1e-12.
pub fn stationary_from_kernel(k: &ChainKernel) -> Result<DistributionVector> {
    let p = k.matrix();
    let d = period(p)?;
    if d != 1 {
        return Err(Error::PeriodicChain(d));
    }
    let m = k.len();
    let mut a = p.transpose() - DMatrix::<f64>::identity(m, m);
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidArgument("singular stationary system".into()))?;
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    for _ in 0..50 {
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
        let next = DVector::from_column_slice(&pi).transpose() * p;
        let residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= 1e-13 {
            break;
        }
        pi = next.iter().copied().collect();
    }
    let total: f64 = pi.iter().sum();
    DistributionVector::new(pi.into_iter().map(|v| v / total).collect())
}

/// Conductance `min_{S: pi(S) <= 1/2} Q(S, S^c) / (pi(S) pi(S^c))`, exhaustive over cuts.
pub fn conductance(k: &ChainKernel) -> Result<f64> {
    let m = k.len();
    if m > MAX_EXHAUSTIVE_CUT_STATES {
        return Err(Error::StateSpaceTooLarge { states: m, max: MAX_EXHAUSTIVE_CUT_STATES });
    }
    let pi = k.stationary_or_solve()?;
    Ok(min_cut_ratio(k.matrix(), pi.probs()).0)
}

/// Exact `(pi(S), Q(S, S^c))` for the subset encoded in `mask`.
fn cut_terms(p: &DMatrix<f64>, pi: &[f64], mask: u32) -> (f64, f64) {
    let m = pi.len();
    let inside = |i: usize| mask >> i & 1 == 1;
    let mass: f64 = (0..m).filter(|&i| inside(i)).map(|i| pi[i]).sum();
    let mut flow = 0.0;
    for i in (0..m).filter(|&i| inside(i)) {
        for j in (0..m).filter(|&j| !inside(j)) {
            flow += pi[i] * p[(i, j)];
        }
    }
    (mass, flow)
}

/// Gray-code sweep over every non-trivial cut with incremental flow updates.
/// The minimizing cut is re-evaluated exactly before returning.
fn min_cut_ratio(p: &DMatrix<f64>, pi: &[f64]) -> (f64, u32) {
    let m = pi.len();
    if m < 2 {
        return (0.0, 0);
    }
    let f = DMatrix::from_fn(m, m, |i, j| pi[i] * p[(i, j)]);
    let mut mask = 0u32;
    let (mut mass, mut flow) = (0.0_f64, 0.0_f64);
    let mut best = (f64::INFINITY, 0u32);
    let consider = |mask: u32, mass: f64, flow: f64, best: &mut (f64, u32)| {
        if mass <= 0.5 + 1e-12 && mass > 0.0 && mass < 1.0 {
            let ratio = flow / (mass * (1.0 - mass));
            if ratio < best.0 {
                *best = (ratio, mask);
            }
        }
    };
    for step in 1u64..(1u64 << m) {
        let bit = step.trailing_zeros() as usize;
        let entering = mask >> bit & 1 == 0;
        let mut into_set = 0.0; // sum_{i in S, i != bit} F[i][bit]
        let mut out_of_bit = 0.0; // sum_{j not in S, j != bit} F[bit][j]
        for j in 0..m {
            if j == bit {
                continue;
            }
            if mask >> j & 1 == 1 {
                into_set += f[(j, bit)];
            } else {
                out_of_bit += f[(bit, j)];
            }
        }
        if entering {
            flow += out_of_bit - into_set;
            mass += pi[bit];
            mask |= 1 << bit;
        } else {
            flow += into_set - out_of_bit;
            mass -= pi[bit];
            mask &= !(1 << bit);
        }
        if mask != (1u32 << m) - 1 {
            consider(mask, mass, flow, &mut best);
        }
    }
    let (mass, flow) = cut_terms(p, pi, best.1);
    (flow / (mass * (1.0 - mass)), best.1)
}

/// The weighted operator norm `sup_{E_u[v] = 0} ||A v||_{2,u} / ||v||_{2,u}`.
///
/// Computed as the largest singular value of `D^{1/2} A D^{-1/2}` composed
/// with the projection onto the orthogonal complement of `sqrt(u)`.
pub fn matrix_norm(a: &DMatrix<f64>, u: &[f64]) -> Result<f64> {
    let m = u.len();
    if !a.is_square() || a.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: a.nrows() });
    }
    if u.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveMeasure);
    }
    let root: Vec<f64> = u.iter().map(|v| v.sqrt()).collect();
    let b = DMatrix::from_fn(m, m, |i, j| root[i] * a[(i, j)] / root[j]);
    let s = DVector::from_column_slice(&root).normalize();
    let proj = DMatrix::<f64>::identity(m, m) - &s * s.transpose();
    let restricted = b * proj;
    Ok(restricted.singular_values().iter().copied().fold(0.0, f64::max))
}

/// `||P||` with respect to the kernel's stationary distribution.
pub fn kernel_norm(k: &ChainKernel) -> Result<f64> {
    let pi = k.stationary_or_solve()?;
    matrix_norm(k.matrix(), pi.probs())
}

/// Continuous-time uniformization `exp(rate (P - I))`.
pub fn uniformized_kernel(k: &ChainKernel, rate: f64) -> Result<ChainKernel> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("rate must be positive, got {rate}")));
    }
    let m = k.len();
    let generator = (k.matrix() - DMatrix::<f64>::identity(m, m)) * rate;
    let mut e = expm(&generator);
    // Entries may round to tiny negatives; rows are renormalized after clamping.
    for mut row in e.row_iter_mut() {
        row.iter_mut().for_each(|v| *v = v.max(0.0));
        let total = row.sum();
        row /= total;
    }
    let out = ChainKernel::new(k.states.clone(), e)?;
    match &k.pi {
        Some(pi) => out.with_stationary(pi.clone()),
        None => Ok(out),
    }
}

/// A spectral-gap bound `||.|| <= 1 - gap`, carried in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    /// `ln(gap)`.
    pub log_gap: f64,
    /// `1 - gap` rendered as a float (rounds to 1 once the gap underflows).
    pub bound: f64,
}

impl GapBound {
    fn from_log_gap(log_gap: f64) -> Self {
        Self { log_gap, bound: -log_gap.exp().min(1.0) + 1.0 }
    }

    pub fn gap(&self) -> f64 {
        self.log_gap.exp()
    }

    /// True when `norm <= 1 - gap`, compared through gaps.
    pub fn dominates(&self, norm: f64) -> bool {
        1.0 - norm >= self.gap()
    }
}

/// Bounds on `||P||` and on `||exp(scale (P - I))||` for one chain family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingBounds {
    pub kernel: GapBound,
    pub uniformized: GapBound,
}

/// Glauber dynamics on `n` nodes with `W_max`:
/// `||P|| <= 1 - 1/(n^2 2^(2n+3) e^(2(n+1)W_max))` and
/// `||e^(n(P-I))|| <= 1 - 1/(n 2^(2n+4) e^(2(n+1)W_max))`.
pub fn mixing_bound_glauber(n: usize, w_max: f64) -> Result<MixingBounds> {
    if n == 0 || !(w_max >= 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and W_max >= 0".into()));
    }
    let nf = n as f64;
    let ln2 = std::f64::consts::LN_2;
    let shared = 2.0 * (nf + 1.0) * w_max;
    let kernel = -(2.0 * nf.ln() + (2.0 * nf + 3.0) * ln2 + shared);
    let uniformized = -(nf.ln() + (2.0 * nf + 4.0) * ln2 + shared);
    Ok(MixingBounds { kernel: GapBound::from_log_gap(kernel), uniformized: GapBound::from_log_gap(uniformized) })
}

/// Loss network with `n` routes, `C_max` and `W_max = max ln phi_i`:
/// `||P|| <= 1 - 1/(8 n^4 C^(2nC+2n+2) e^(2(nC+1)W_max))` and
/// `||e^(nR(P-I))|| <= 1 - 1/(16 n^3 C^(2nC+2n+2) e^(2(nC+1)W_max))`.
pub fn mixing_bound_lossnet(n: usize, c_max: u32, w_max: f64) -> Result<MixingBounds> {
    if n == 0 || c_max == 0 || !(w_max >= 0.0) {
        return Err(Error::InvalidArgument("need n >= 1, C_max >= 1 and W_max >= 0".into()));
    }
    let nf = n as f64;
    let c = f64::from(c_max);
    let shared = (2.0 * nf * c + 2.0 * nf + 2.0) * c.ln() + 2.0 * (nf * c + 1.0) * w_max;
    let kernel = -(8f64.ln() + 4.0 * nf.ln() + shared);
    let uniformized = -(16f64.ln() + 3.0 * nf.ln() + shared);
    Ok(MixingBounds { kernel: GapBound::from_log_gap(kernel), uniformized: GapBound::from_log_gap(uniformized) })
}
