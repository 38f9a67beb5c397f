//! Network topologies and their schedule spaces.
//!
//! A wireless network is an undirected interference graph over `n` queues;
//! its feasible schedules are the independent sets `I(G)`. A buffered
//! circuit-switched network is a set of capacitated links crossed by `n`
//! fixed routes; its feasible allocations `X` are the non-negative integer
//! route occupancies respecting every link capacity.
//!
//! Both schedule spaces are enumerated in lexicographic order. The position
//! of a schedule in that order is its state index everywhere in the crate.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state space the exact-analysis modules will enumerate.
pub const DEFAULT_ENUMERATION_CAP: usize = 4096;

/// A wireless schedule: `sigma_i = 1` when queue `i` transmits.
pub type Schedule = Vec<u32>;

/// A circuit allocation: `z_i` active flows on route `i`.
pub type FlowAllocation = Vec<u32>;

/// Undirected conflict graph over `n` queues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl InterferenceGraph {
    /// Builds a graph, normalizing each edge to `(min, max)` and dropping duplicates.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("graph needs at least one node".into()));
        }
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a},{b}) has an endpoint outside 0..{n}"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &normalized {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for adj in &mut neighbors {
            adj.sort_unstable();
        }
        Ok(Self { n, edges: normalized, neighbors })
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::new(n, edges)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Cycle on `n >= 3` nodes.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidTopology("cycle needs at least 3 nodes".into()));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// True when some neighbor of `i` is active in `sigma`.
    pub fn blocked(&self, i: usize, sigma: &[u32]) -> bool {
        self.neighbors[i].iter().any(|&j| sigma[j] != 0)
    }

    pub fn is_independent(&self, sigma: &[u32]) -> bool {
        sigma.len() == self.n
            && sigma.iter().all(|&s| s <= 1)
            && self.edges.iter().all(|&(a, b)| sigma[a] + sigma[b] <= 1)
    }
}

/// A capacitated link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub id: String,
    pub capacity: u32,
}

/// Capacitated links plus `n` routes, each a non-empty set of links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitNetwork {
    links: Vec<Link>,
    /// Route `i` as indices into `links`.
    routes: Vec<Vec<usize>>,
    c_max: u32,
}

impl CircuitNetwork {
    /// Builds a network from link definitions and routes given as link ids.
    pub fn new(links: Vec<Link>, routes: Vec<Vec<String>>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::InvalidTopology("network needs at least one link".into()));
        }
        let mut index = HashMap::new();
        for (k, link) in links.iter().enumerate() {
            if link.capacity == 0 {
                return Err(Error::InvalidTopology(format!("link '{}' has zero capacity", link.id)));
            }
            if index.insert(link.id.clone(), k).is_some() {
                return Err(Error::InvalidTopology(format!("duplicate link id '{}'", link.id)));
            }
        }
        if routes.is_empty() {
            return Err(Error::InvalidTopology("network needs at least one route".into()));
        }
        let mut resolved = Vec::with_capacity(routes.len());
        for (i, route) in routes.iter().enumerate() {
            if route.is_empty() {
                return Err(Error::InvalidTopology(format!("route {i} is empty")));
            }
            let mut ids = Vec::with_capacity(route.len());
            for id in route {
                let k = *index
                    .get(id)
                    .ok_or_else(|| Error::InvalidTopology(format!("route {i} uses unknown link '{id}'")))?;
                ids.push(k);
            }
            ids.sort_unstable();
            ids.dedup();
            resolved.push(ids);
        }
        let c_max = links.iter().map(|l| l.capacity).max().unwrap_or(1);
        Ok(Self { links, routes: resolved, c_max })
    }

    /// `routes` routes that all cross one shared link of the given capacity.
    pub fn single_link(routes: usize, capacity: u32) -> Result<Self> {
        Self::new(
            vec![Link { id: "e0".into(), capacity }],
            vec![vec!["e0".to_string()]; routes],
        )
    }

    pub fn n(&self) -> usize {
        self.routes.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn route(&self, i: usize) -> &[usize] {
        &self.routes[i]
    }

    pub fn c_max(&self) -> u32 {
        self.c_max
    }

    /// Per-link load `sum_{i: e in R_i} z_i`.
    pub fn link_loads(&self, z: &[u32]) -> Vec<u64> {
        let mut load = vec![0u64; self.links.len()];
        for (i, route) in self.routes.iter().enumerate() {
            for &e in route {
                load[e] += u64::from(z[i]);
            }
        }
        load
    }

    pub fn is_feasible(&self, z: &[u32]) -> bool {
        z.len() == self.n()
            && self
                .link_loads(z)
                .iter()
                .zip(&self.links)
                .all(|(&load, link)| load <= u64::from(link.capacity))
    }

    /// Whether one more flow fits on route `i` given occupancy `z`.
    pub fn admits(&self, z: &[u32], i: usize) -> bool {
        let loads = self.link_loads(z);
        self.routes[i]
            .iter()
            .all(|&e| loads[e] < u64::from(self.links[e].capacity))
    }
}

/// Either of the two network models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    Wireless(InterferenceGraph),
    Circuit(CircuitNetwork),
}

impl Topology {
    /// Number of queues (wireless nodes or circuit routes).
    pub fn n(&self) -> usize {
        match self {
            Topology::Wireless(g) => g.n(),
            Topology::Circuit(net) => net.n(),
        }
    }

    pub fn is_wireless(&self) -> bool {
        matches!(self, Topology::Wireless(_))
    }

    /// Largest per-coordinate schedule value: 1 for wireless, `C_max` for circuit.
    pub fn c_max(&self) -> u32 {
        match self {
            Topology::Wireless(_) => 1,
            Topology::Circuit(net) => net.c_max(),
        }
    }

    pub fn is_feasible(&self, x: &[u32]) -> bool {
        match self {
            Topology::Wireless(g) => g.is_independent(x),
            Topology::Circuit(net) => net.is_feasible(x),
        }
    }

    pub fn state_space(&self, cap: usize) -> Result<StateSpace> {
        let states = match self {
            Topology::Wireless(g) => enumerate_independent_sets_with_cap(g, cap)?,
            Topology::Circuit(net) => enumerate_allocations_with_cap(net, cap)?,
        };
        Ok(StateSpace::new(states))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TopologyConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        raw.build()
    }
}

/// JSON form of a topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologyConfig {
    Wireless { n: usize, edges: Vec<[usize; 2]> },
    Circuit { links: Vec<Link>, routes: Vec<Vec<String>> },
}

impl TopologyConfig {
    pub fn build(&self) -> Result<Topology> {
        match self {
            TopologyConfig::Wireless { n, edges } => Ok(Topology::Wireless(InterferenceGraph::new(
                *n,
                edges.iter().map(|e| (e[0], e[1])),
            )?)),
            TopologyConfig::Circuit { links, routes } => {
                Ok(Topology::Circuit(CircuitNetwork::new(links.clone(), routes.clone())?))
            }
        }
    }
}

impl From<&Topology> for TopologyConfig {
    fn from(t: &Topology) -> Self {
        match t {
            Topology::Wireless(g) => TopologyConfig::Wireless {
                n: g.n(),
                edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
            },
            Topology::Circuit(net) => TopologyConfig::Circuit {
                links: net.links().to_vec(),
                routes: (0..net.n())
                    .map(|i| net.route(i).iter().map(|&e| net.links()[e].id.clone()).collect())
                    .collect(),
            },
        }
    }
}

/// An enumerated schedule space with a reverse index.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl StateSpace {
    pub fn new(states: Vec<Vec<u32>>) -> Self {
        let index = states.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        Self { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn get(&self, k: usize) -> &[u32] {
        &self.states[k]
    }

    pub fn index_of(&self, x: &[u32]) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Compact label such as `0110` or `0.2.1`.
    pub fn label(&self, k: usize) -> String {
        state_label(&self.states[k])
    }
}

pub fn state_label(x: &[u32]) -> String {
    if x.iter().all(|&v| v <= 9) {
        x.iter().map(|v| char::from(b'0' + *v as u8)).collect()
    } else {
        x.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
    }
}

/// All independent sets of `g` in lexicographic order.
pub fn enumerate_independent_sets(g: &InterferenceGraph) -> Result<Vec<Schedule>> {
    enumerate_independent_sets_with_cap(g, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_independent_sets_with_cap(g: &InterferenceGraph, cap: usize) -> Result<Vec<Schedule>> {
    fn go(g: &InterferenceGraph, i: usize, sigma: &mut Vec<u32>, out: &mut Vec<Schedule>, cap: usize) -> Result<()> {
        if i == g.n() {
            if out.len() == cap {
                return Err(Error::EnumerationCapExceeded { cap });
            }
            out.push(sigma.clone());
            return Ok(());
        }
        sigma[i] = 0;
        go(g, i + 1, sigma, out, cap)?;
        // Only earlier neighbors are decided at this point.
        if g.neighbors(i).iter().all(|&j| j > i || sigma[j] == 0) {
            sigma[i] = 1;
            go(g, i + 1, sigma, out, cap)?;
            sigma[i] = 0;
        }
        Ok(())
    }
    let mut out = Vec::new();
    let mut sigma = vec![0; g.n()];
    go(g, 0, &mut sigma, &mut out, cap)?;
    Ok(out)
}

/// All feasible allocations of `net` in lexicographic order.
pub fn enumerate_allocations(net: &CircuitNetwork) -> Result<Vec<FlowAllocation>> {
    enumerate_allocations_with_cap(net, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_allocations_with_cap(net: &CircuitNetwork, cap: usize) -> Result<Vec<FlowAllocation>> {
    fn go(
        net: &CircuitNetwork,
        i: usize,
        residual: &mut [u32],
        z: &mut Vec<u32>,
        out: &mut Vec<FlowAllocation>,
        cap: usize,
    ) -> Result<()> {
        if i == net.n() {
            if out.len() == cap {
                return Err(Error::EnumerationCapExceeded { cap });
            }
            out.push(z.clone());
            return Ok(());
        }
        let room = net.route(i).iter().map(|&e| residual[e]).min().unwrap_or(0);
        for k in 0..=room {
            z[i] = k;
            for &e in net.route(i) {
                residual[e] -= k;
            }
            let r = go(net, i + 1, residual, z, out, cap);
            for &e in net.route(i) {
                residual[e] += k;
            }
            r?;
        }
        z[i] = 0;
        Ok(())
    }
    let mut residual: Vec<u32> = net.links().iter().map(|l| l.capacity).collect();
    let mut out = Vec::new();
    let mut z = vec![0; net.n()];
    go(net, 0, &mut residual, &mut z, &mut out, cap)?;
    Ok(out)
}

/// The Markov state `(Q, x)` of a network at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub q: Vec<f64>,
    pub x: Vec<u32>,
    pub t: f64,
}

/// A broken state invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: String,
    pub indices: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.constraint)
    }
}

/// Checks every invariant of `state` against `topology`.
///
/// Returns `Ok(None)` when the state is valid, `Ok(Some(v))` naming the first
/// failing constraint otherwise.
pub fn validate_state(topology: &Topology, state: &NetworkState) -> Result<Option<Violation>> {
    let n = topology.n();
    for len in [state.q.len(), state.x.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    if let Some(i) = state.q.iter().position(|&q| !(q >= 0.0)) {
        return Ok(Some(Violation { constraint: format!("negative queue {i}"), indices: vec![i] }));
    }
    if !(state.t >= 0.0) {
        return Ok(Some(Violation { constraint: "negative time".into(), indices: vec![] }));
    }
    match topology {
        Topology::Wireless(g) => {
            if let Some(i) = state.x.iter().position(|&s| s > 1) {
                return Ok(Some(Violation { constraint: format!("non-binary schedule entry {i}"), indices: vec![i] }));
            }
            if let Some(&(a, b)) = g.edges().iter().find(|&&(a, b)| state.x[a] + state.x[b] > 1) {
                return Ok(Some(Violation { constraint: format!("edge ({a},{b})"), indices: vec![a, b] }));
            }
        }
        Topology::Circuit(net) => {
            if let Some(i) = state.q.iter().position(|q| q.fract() != 0.0) {
                return Ok(Some(Violation { constraint: format!("non-integer queue {i}"), indices: vec![i] }));
            }
            let loads = net.link_loads(&state.x);
            if let Some(e) = loads.iter().zip(net.links()).position(|(&l, link)| l > u64::from(link.capacity)) {
                return Ok(Some(Violation {
                    constraint: format!("link capacity '{}' ({} > {})", net.links()[e].id, loads[e], net.links()[e].capacity),
                    indices: vec![e],
                }));
            }
        }
    }
    Ok(None)
}
