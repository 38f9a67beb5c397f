//! Randomized, distributed scheduling for constrained queueing networks.
//!
//! The crate covers two network models, wireless interference networks and
//! buffered circuit-switched networks, and the tools needed to study the
//! randomized CSMA-style and loss-network-style schedulers on them:
//!
//! * [`model`]: topologies, schedule spaces and state validation;
//! * [`weights`]: queue-length weight functions and the node-weight rule;
//! * [`chains`]: exact Glauber and loss-network kernels, stationary laws,
//!   conductance, weighted operator norms and mixing bounds;
//! * [`sim`]: event-driven simulation of the randomized algorithms and the
//!   max-weight baselines;
//! * [`analysis`]: distances, Lyapunov drift, the variational free-energy
//!   characterization and mixing diagnostics;
//! * [`capacity`]: capacity-region membership and load scaling;
//! * [`verify`]: the randomized invariant suites run by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod capacity;
pub mod chains;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod verify;
pub mod weights;

pub use chains::{ChainKernel, DistributionVector};
pub use error::{Error, Result};
pub use model::{CircuitNetwork, InterferenceGraph, NetworkState, StateSpace, Topology};
pub use sim::{SimConfig, Trace};
pub use weights::{WeightFunction, WeightMode};
