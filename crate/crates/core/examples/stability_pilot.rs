//! Pilot runs that calibrate the stability thresholds used by the acceptance
//! suite: stable loads at three times the acceptance horizon, 10 seeds each.
//!
//! Run with `cargo run --release -p schednet-core --example stability_pilot`.

use schednet::model::{CircuitNetwork, InterferenceGraph, Topology};
use schednet::sim::{replica_map, SimConfig};

fn main() -> schednet::Result<()> {
    let horizon = 3e5;
    let seeds: Vec<u64> = (0..10).collect();
    let cases = [
        ("wireless K2, load 0.5", Topology::Wireless(InterferenceGraph::complete(2)?), vec![0.25, 0.25]),
        ("circuit 2 routes / 1 link, load 0.4", Topology::Circuit(CircuitNetwork::single_link(2, 1)?), vec![0.2, 0.2]),
    ];
    for (name, topology, lambda) in cases {
        let cfg = SimConfig::new(topology, lambda, horizon, 0);
        let means = replica_map(&cfg, &seeds, |tr| tr.mean_qmax(horizon / 2.0, horizon).unwrap_or(f64::NAN))?;
        let max = means.iter().copied().fold(0.0, f64::max);
        println!("{name}: last-half mean Q_max per seed {means:.3?}; max {max:.3}");
    }
    Ok(())
}
