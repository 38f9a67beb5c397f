use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use schednet::analysis::{drift_report, stationary_law, timescale_report, verify_goodpi_with, DriftReport, GoodPiReport};
use schednet::capacity::{load_factor, CapacityQuery, LoadResult};
use schednet::chains::distribution_csv;
use schednet::sim::{check_conservation, check_feasibility, check_non_preemption, replica_map, Summary};
use schednet::verify::{run_suite, Suite, VerifyReport};
use schednet::weights::node_weights;
use schednet::{SimConfig, Topology, Trace};

use crate::artifacts::ArtifactDir;
use crate::error::{CliError, CliResult};
use crate::spec::{Analysis, ExperimentSpec, Variant};

/// Conservation tolerance for fluid (wireless) queues; circuit queues are exact.
const WIRELESS_CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
struct RunRecord {
    #[serde(flatten)]
    summary: Summary,
    final_q: Vec<f64>,
    mean_qmax: f64,
    mean_qmax_last_half: f64,
    violations: Vec<String>,
}

#[derive(Debug, Serialize)]
struct VariantSummary {
    label: String,
    load_target: Option<f64>,
    lambda: Vec<f64>,
    /// Averages over seeds.
    mean_qmax: f64,
    mean_qmax_last_half: f64,
    runs: Vec<RunRecord>,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    spec_hash: &'a str,
    seeds: &'a [u64],
    variants: Vec<VariantSummary>,
}

fn trace_violations(trace: &Trace, cfg: &SimConfig) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(v) = check_feasibility(trace, &cfg.topology) {
        out.push(format!("feasibility: {v}"));
    }
    let tol = if cfg.topology.is_wireless() { WIRELESS_CONSERVATION_TOL } else { 0.0 };
    if let Some(v) = check_conservation(trace, tol) {
        out.push(format!("conservation: {v}"));
    }
    if let (Topology::Circuit(net), Some(_)) = (&cfg.topology, &trace.event_log) {
        if let Some(v) = check_non_preemption(trace, net) {
            out.push(format!("non-preemption: {v}"));
        }
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn simulate(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let hash = spec.hash();
    let seeds = spec.sorted_seeds();
    let mut dir = ArtifactDir::create(out)?;
    let mut variants = Vec::new();
    let mut failed = 0;
    let mut total = 0;

    for variant in spec.variants()? {
        let cfg = &variant.config;
        let runs = replica_map(cfg, &seeds, |trace| {
            let h = trace.horizon;
            let record = RunRecord {
                summary: trace.summary(),
                final_q: trace.snapshots.last().map(|s| s.q.clone()).unwrap_or_default(),
                mean_qmax: trace.mean_qmax(0.0, h).unwrap_or(0.0),
                mean_qmax_last_half: trace.mean_qmax(h / 2.0, h).unwrap_or(0.0),
                violations: trace_violations(&trace, cfg),
            };
            let events = trace.event_log.as_ref().map(|_| trace.event_log_csv());
            (record, trace.to_csv(), events)
        })?;

        let mut records = Vec::new();
        for (seed, (record, csv, events)) in seeds.iter().zip(runs) {
            dir.write(&format!("traces/{}/seed_{seed}.csv", variant.label), csv.as_bytes())?;
            if let Some(events) = events {
                dir.write(&format!("traces/{}/seed_{seed}_events.csv", variant.label), events.as_bytes())?;
            }
            total += 1;
            if !record.violations.is_empty() {
                failed += 1;
            }
            println!(
                "{} seed {seed}: mean Q_max {:.4}, last half {:.4}, {}",
                variant.label,
                record.mean_qmax,
                record.mean_qmax_last_half,
                if record.violations.is_empty() { "invariants ok".to_string() } else { record.violations.join("; ") }
            );
            records.push(record);
        }
        variants.push(VariantSummary {
            label: variant.label.clone(),
            load_target: variant.load_target,
            lambda: cfg.lambda.clone(),
            mean_qmax: mean(records.iter().map(|r| r.mean_qmax)),
            mean_qmax_last_half: mean(records.iter().map(|r| r.mean_qmax_last_half)),
            runs: records,
        });
    }

    dir.write_json("summary.json", &SimulateSummary { spec_hash: &hash, seeds: &seeds, variants })?;
    dir.finish("simulate", &hash)?;
    checks_outcome(failed, total)
}

#[derive(Debug, Serialize)]
struct CapacityEntry {
    label: String,
    load_target: Option<f64>,
    lambda: Vec<f64>,
    result: LoadResult,
}

fn capacity_entries(variants: &[Variant]) -> CliResult<Vec<CapacityEntry>> {
    variants
        .iter()
        .map(|v| {
            let q = CapacityQuery::for_topology(&v.config.topology, v.config.lambda.clone())?;
            Ok(CapacityEntry {
                label: v.label.clone(),
                load_target: v.load_target,
                lambda: v.config.lambda.clone(),
                result: load_factor(&q)?,
            })
        })
        .collect()
}

pub fn capacity(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    #[derive(Serialize)]
    struct Report<'a> {
        spec_hash: &'a str,
        variants: &'a [CapacityEntry],
    }
    let hash = spec.hash();
    let entries = capacity_entries(&spec.variants()?)?;
    for e in &entries {
        println!(
            "{}: load {:.6} ({})",
            e.label,
            e.result.load,
            if e.result.strictly_admissible {
                "strictly admissible"
            } else if e.result.admissible {
                "on the boundary"
            } else {
                "not admissible"
            }
        );
    }
    let mut dir = ArtifactDir::create(out)?;
    dir.write_json("capacity.json", &Report { spec_hash: &hash, variants: &entries })?;
    dir.finish("capacity", &hash)
}

#[derive(Debug, Serialize)]
struct PerSeed<T> {
    label: String,
    seed: u64,
    report: T,
}

#[derive(Debug, Serialize)]
struct GoodPiEntry {
    label: String,
    /// `None` for the initial queues, otherwise the seed whose final queues were used.
    seed: Option<u64>,
    q: Vec<f64>,
    report: GoodPiReport,
}

#[derive(Debug, Serialize)]
struct TimescaleEntry {
    label: String,
    replicas: usize,
    states: usize,
    points: Vec<schednet::analysis::TimescalePoint>,
}

#[derive(Default, Serialize)]
struct AnalysisReport<'a> {
    spec_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity: Option<Vec<CapacityEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<Vec<PerSeed<DriftReport>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    goodpi: Option<Vec<GoodPiEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stationary: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timescale: Option<Vec<TimescaleEntry>>,
}

const DEFAULT_ANALYSES: [Analysis; 4] = [Analysis::Capacity, Analysis::Drift, Analysis::Goodpi, Analysis::Stationary];

pub fn analyze(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let hash = spec.hash();
    let seeds = spec.sorted_seeds();
    let analyses: &[Analysis] = if spec.analyses.is_empty() { &DEFAULT_ANALYSES } else { &spec.analyses };
    let wants = |a: Analysis| analyses.contains(&a);
    let variants = spec.variants()?;
    let mut dir = ArtifactDir::create(out)?;
    let mut report = AnalysisReport { spec_hash: &hash, ..Default::default() };
    let (mut failed, mut total) = (0, 0);

    if wants(Analysis::Capacity) {
        report.capacity = Some(capacity_entries(&variants)?);
    }

    if wants(Analysis::Drift) || wants(Analysis::Goodpi) {
        let mut drift = Vec::new();
        let mut goodpi = Vec::new();
        for v in &variants {
            let cfg = &v.config;
            let window = spec.drift.clone().map(|w| (w.b1, w.b2)).unwrap_or((0, cfg.horizon.floor() as u64));
            if wants(Analysis::Goodpi) {
                let q0 = cfg.initial();
                goodpi.push(GoodPiEntry {
                    label: v.label.clone(),
                    seed: None,
                    report: verify_goodpi_with(&cfg.topology, &q0, spec.goodpi_epsilon, &cfg.weight_fn, cfg.weight_mode)?,
                    q: q0,
                });
            }
            let per_seed = replica_map(cfg, &seeds, |trace| -> schednet::Result<_> {
                let d = if wants(Analysis::Drift) {
                    Some(drift_report(&trace, &cfg.topology, window.0, window.1)?)
                } else {
                    None
                };
                let q = trace.snapshots.last().map(|s| s.q.clone()).unwrap_or_else(|| cfg.initial());
                let g = if wants(Analysis::Goodpi) {
                    Some(verify_goodpi_with(&cfg.topology, &q, spec.goodpi_epsilon, &cfg.weight_fn, cfg.weight_mode)?)
                } else {
                    None
                };
                Ok((d, q, g))
            })?;
            for (&seed, result) in seeds.iter().zip(per_seed) {
                let (d, q, g) = result?;
                if let Some(report) = d {
                    drift.push(PerSeed { label: v.label.clone(), seed, report });
                }
                if let Some(report) = g {
                    goodpi.push(GoodPiEntry { label: v.label.clone(), seed: Some(seed), q, report });
                }
            }
        }
        for g in &goodpi {
            total += 1;
            if !g.report.potential_bound_holds {
                failed += 1;
            }
        }
        if wants(Analysis::Drift) {
            for d in &drift {
                println!("drift {} seed {}: {:.6} per slot over [{}, {}]", d.label, d.seed, d.report.drift, d.report.b1, d.report.b2);
            }
            report.drift = Some(drift);
        }
        if wants(Analysis::Goodpi) {
            for g in &goodpi {
                println!(
                    "goodpi {} {}: slack {:.6}, E[T] >= max T - log|Omega|: {}",
                    g.label,
                    g.seed.map_or("initial".to_string(), |s| format!("seed {s}")),
                    g.report.slack,
                    g.report.potential_bound_holds
                );
            }
            report.goodpi = Some(goodpi);
        }
    }

    if wants(Analysis::Stationary) {
        let mut paths = Vec::new();
        for v in &variants {
            let cfg = &v.config;
            let w = node_weights(&cfg.initial(), &cfg.weight_fn, cfg.weight_mode)?;
            let (states, pi) = stationary_law(&cfg.topology, &w)?;
            let path = format!("stationary/{}.csv", v.label);
            dir.write(&path, distribution_csv(&states, &pi).as_bytes())?;
            paths.push(path);
        }
        report.stationary = Some(paths);
    }

    if wants(Analysis::Timescale) {
        let ts = spec.timescale.as_ref().expect("validated on load");
        let mut entries = Vec::new();
        for v in &variants {
            let mut base = v.config.clone();
            base.seed = seeds[0];
            let q0 = ts.initial_queues.clone().unwrap_or_else(|| base.initial());
            let r = timescale_report(&base, &q0, ts.replicas, &ts.times)?;
            dir.write(&format!("timescale/{}.csv", v.label), r.to_csv().as_bytes())?;
            for p in &r.points {
                println!("timescale {} t={}: TV {:.4} (stderr {:.4})", v.label, p.t, p.tv, p.stderr);
            }
            entries.push(TimescaleEntry { label: v.label.clone(), replicas: r.replicas, states: r.states, points: r.points });
        }
        report.timescale = Some(entries);
    }

    dir.write_json("analysis.json", &report)?;
    dir.finish("analyze", &hash)?;
    checks_outcome(failed, total)
}

pub fn verify(suite: Suite, master_seed: u64, out: Option<&Path>) -> CliResult<()> {
    let report = run_suite(suite, master_seed);
    print!("{report}");
    if let Some(out) = out {
        #[derive(Serialize)]
        struct Request {
            suite: Suite,
            master_seed: u64,
        }
        #[derive(Serialize)]
        struct Artifact<'a> {
            spec_hash: &'a str,
            report: &'a VerifyReport,
        }
        let canonical = serde_json::to_vec(&Request { suite, master_seed }).expect("request serializes");
        let hash = hex::encode(Sha256::digest(canonical));
        let mut dir = ArtifactDir::create(out)?;
        dir.write_json("verify.json", &Artifact { spec_hash: &hash, report: &report })?;
        dir.write("verify.txt", report.to_string().as_bytes())?;
        dir.finish("verify", &hash)?;
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    checks_outcome(failed, report.checks.len())
}

fn checks_outcome(failed: usize, total: usize) -> CliResult<()> {
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed { failed, total })
    }
}
