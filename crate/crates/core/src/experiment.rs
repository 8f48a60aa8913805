//! Experiment harness: seeded parameter sampling, sweeps over the security
//! budget factor, result aggregation, CSV/JSON emission and an independent
//! schedule auditor.
//!
//! Determinism contract: a sweep's raw output is a pure function of its
//! configuration and base seed. Every cell (workflow, budget factor,
//! repetition) derives its own sub-seed, so cells can be computed in any
//! order; rows are emitted in a fixed order regardless. Wall-clock timings
//! are measured but kept out of the raw CSV unless explicitly requested,
//! since they are the one non-reproducible column.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cloud::CloudSystem;
use crate::error::Result;
use crate::eval::{Mapping, ScheduleRecord};
use crate::scheduler::{run_pipeline, Algorithm, SchedulerConfig};
use crate::security::{CipherAssignment, CipherTable, SecurityConstraints};
use crate::workflow::Workflow;

/// One mixing step of the splitmix64 generator (Steele, Lea, Flood 2014).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic sub-seed derivation: fold the parts into the base seed one
/// splitmix64 step at a time.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for &p in parts {
        s = splitmix64(s ^ p);
    }
    s
}

/// How per-run security parameters and failure rates are drawn.
#[derive(Debug, Clone)]
pub struct SamplingSpec {
    /// Edge weights are uniform in `[weight_lo, weight_hi]`, rounded to
    /// `scale_digits` decimals.
    pub weight_lo: f64,
    pub weight_hi: f64,
    /// Failure rates are uniform in `[rate_lo, rate_hi]` per second.
    pub rate_lo: f64,
    pub rate_hi: f64,
    pub scale_digits: u32,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            weight_lo: 0.1,
            weight_hi: 1.0,
            rate_lo: 1e-8,
            rate_hi: 1e-7,
            scale_digits: 1,
        }
    }
}

/// Draws one run's security parameters: per-edge weights and caps (the cap
/// is the vulnerability of a uniformly chosen table cipher), resampled
/// failure rates, and the system budget `eta` times the maximum
/// vulnerability of the sampled workflow. Draw order is fixed: edge weights
/// and caps in canonical edge order, then failure rates.
pub fn sample_security(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    eta: f64,
    spec: &SamplingSpec,
    rng: &mut ChaCha8Rng,
) -> (Workflow, CloudSystem, SecurityConstraints) {
    assert!(w.is_augmented(), "sampling requires an augmented workflow");
    let scale = 10f64.powi(spec.scale_digits as i32);
    let max_cap = table.max_vulnerability();
    let sampled = w.with_edge_security(|e, _| {
        if w.is_real_edge(e) {
            let weight =
                (rng.random_range(spec.weight_lo..=spec.weight_hi) * scale).round() / scale;
            let cap = table.cipher(rng.random_range(0..table.len())).vulnerability;
            (weight, cap)
        } else {
            (0.0, max_cap)
        }
    });
    let sampled_sys = sys.resample_failure_rates(spec.rate_lo, spec.rate_hi, rng);
    let uv_req = eta * crate::security::max_vulnerability(&sampled, table);
    let cons = SecurityConstraints {
        system_cap: uv_req,
        scale_digits: spec.scale_digits,
    };
    (sampled, sampled_sys, cons)
}

/// The default budget-factor grid.
pub fn eta_grid_default() -> Vec<f64> {
    (1..=7).map(|i| i as f64 / 10.0).collect()
}

/// Sweep specification.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Raw (un-augmented) workflows.
    pub workflows: Vec<Workflow>,
    pub algorithms: Vec<Algorithm>,
    pub etas: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub sampling: SamplingSpec,
    pub scheduler: SchedulerConfig,
    /// Include wall-clock milliseconds in the raw CSV (non-reproducible).
    pub include_timings: bool,
}

impl ExperimentConfig {
    pub fn new(workflows: Vec<Workflow>) -> ExperimentConfig {
        ExperimentConfig {
            workflows,
            algorithms: vec![Algorithm::Lbs, Algorithm::Random],
            etas: eta_grid_default(),
            repetitions: 15,
            base_seed: 42,
            sampling: SamplingSpec::default(),
            scheduler: SchedulerConfig::default(),
            include_timings: false,
        }
    }
}

/// One evaluated run.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub workflow: String,
    pub n: usize,
    pub algorithm: String,
    pub eta: f64,
    pub seed: u64,
    pub makespan_s: f64,
    pub cost_usd: f64,
    pub reliability: f64,
    pub wall_ms: f64,
    pub feasible: bool,
}

/// Per-cell means and population standard deviations over feasible runs.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub workflow: String,
    pub algorithm: String,
    pub eta: f64,
    pub reps: usize,
    pub feasible: usize,
    pub mean_makespan_s: f64,
    pub std_makespan_s: f64,
    pub mean_cost_usd: f64,
    pub std_cost_usd: f64,
    pub mean_reliability: f64,
    pub std_reliability: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Runs the full sweep: for every workflow, budget factor and repetition the
/// security parameters are sampled once and every algorithm runs against
/// them. Single-run failures become infeasible rows; the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig, sys: &CloudSystem, table: &CipherTable) -> Result<SweepOutput> {
    let mut keyed: Vec<((usize, usize, usize, usize), ResultRow)> = Vec::new();
    for (wi, raw) in cfg.workflows.iter().enumerate() {
        let w = raw.augment()?;
        let n = w.num_real_tasks();
        for (ei, &eta) in cfg.etas.iter().enumerate() {
            for rep in 0..cfg.repetitions {
                let cell_seed = derive_seed(cfg.base_seed, &[wi as u64, ei as u64, rep as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
                let (w2, sys2, cons) = sample_security(&w, sys, table, eta, &cfg.sampling, &mut rng);
                for (ai, &algo) in cfg.algorithms.iter().enumerate() {
                    let mut scheduler = cfg.scheduler.clone();
                    scheduler.seed = cell_seed;
                    let started = Instant::now();
                    let outcome = run_pipeline(&w2, &sys2, table, &cons, &scheduler, algo);
                    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                    let row = match outcome {
                        Ok(schedule) => {
                            let pool = sys2.build_resource_pool(&w2);
                            let record = ScheduleRecord::from_schedule(
                                &w2,
                                &sys2,
                                table,
                                &pool,
                                &schedule,
                                crate::eval::RunMeta {
                                    algorithm: algo.name().into(),
                                    eta,
                                    seed: cell_seed,
                                    uv_req: cons.system_cap,
                                    scale_digits: cons.scale_digits,
                                },
                            );
                            let audit = validate_schedule(&w2, &sys2, table, &cons, &record);
                            ResultRow {
                                workflow: w.name().to_string(),
                                n,
                                algorithm: algo.name().into(),
                                eta,
                                seed: cell_seed,
                                makespan_s: schedule.makespan,
                                cost_usd: schedule.cost,
                                reliability: schedule.reliability,
                                wall_ms,
                                feasible: audit.passed(),
                            }
                        }
                        Err(_) => ResultRow {
                            workflow: w.name().to_string(),
                            n,
                            algorithm: algo.name().into(),
                            eta,
                            seed: cell_seed,
                            makespan_s: 0.0,
                            cost_usd: 0.0,
                            reliability: 0.0,
                            wall_ms,
                            feasible: false,
                        },
                    };
                    keyed.push(((wi, ai, ei, rep), row));
                }
            }
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    let rows: Vec<ResultRow> = keyed.into_iter().map(|(_, r)| r).collect();
    let aggregates = aggregate(&rows, cfg);
    Ok(SweepOutput { rows, aggregates })
}

fn aggregate(rows: &[ResultRow], cfg: &ExperimentConfig) -> Vec<AggregateRow> {
    let mut groups: HashMap<(String, String, u64), Vec<&ResultRow>> = HashMap::new();
    for row in rows {
        groups
            .entry((row.workflow.clone(), row.algorithm.clone(), row.eta.to_bits()))
            .or_default()
            .push(row);
    }
    let mean_std = |values: &[f64]| -> (f64, f64) {
        if values.is_empty() {
            return (0.0, 0.0);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        (mean, var.sqrt())
    };
    // Emit in configuration order.
    let mut out = Vec::new();
    for w in &cfg.workflows {
        for algo in &cfg.algorithms {
            for &eta in &cfg.etas {
                let key = (w.name().to_string(), algo.name().to_string(), eta.to_bits());
                let Some(group) = groups.get(&key) else { continue };
                let feasible: Vec<&&ResultRow> = group.iter().filter(|r| r.feasible).collect();
                let makespans: Vec<f64> = feasible.iter().map(|r| r.makespan_s).collect();
                let costs: Vec<f64> = feasible.iter().map(|r| r.cost_usd).collect();
                let rels: Vec<f64> = feasible.iter().map(|r| r.reliability).collect();
                let (mean_makespan_s, std_makespan_s) = mean_std(&makespans);
                let (mean_cost_usd, std_cost_usd) = mean_std(&costs);
                let (mean_reliability, std_reliability) = mean_std(&rels);
                out.push(AggregateRow {
                    workflow: w.name().to_string(),
                    algorithm: algo.name().to_string(),
                    eta,
                    reps: group.len(),
                    feasible: feasible.len(),
                    mean_makespan_s,
                    std_makespan_s,
                    mean_cost_usd,
                    std_cost_usd,
                    mean_reliability,
                    std_reliability,
                });
            }
        }
    }
    out
}

/// Raw results as CSV. `include_timings` adds the non-reproducible wall_ms
/// column.
pub fn raw_csv(rows: &[ResultRow], include_timings: bool) -> String {
    let mut out = String::new();
    if include_timings {
        out.push_str("workflow,n,algorithm,eta,seed,makespan_s,cost_usd,reliability,wall_ms,feasible\n");
    } else {
        out.push_str("workflow,n,algorithm,eta,seed,makespan_s,cost_usd,reliability,feasible\n");
    }
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.workflow, r.n, r.algorithm, r.eta, r.seed, r.makespan_s, r.cost_usd, r.reliability
        );
        if include_timings {
            let _ = write!(out, ",{}", r.wall_ms);
        }
        let _ = writeln!(out, ",{}", r.feasible);
    }
    out
}

/// Per-cell aggregate CSV.
pub fn aggregate_csv(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from(
        "workflow,algorithm,eta,reps,feasible,mean_makespan_s,std_makespan_s,\
         mean_cost_usd,std_cost_usd,mean_reliability,std_reliability\n",
    );
    for a in aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            a.workflow,
            a.algorithm,
            a.eta,
            a.reps,
            a.feasible,
            a.mean_makespan_s,
            a.std_makespan_s,
            a.mean_cost_usd,
            a.std_cost_usd,
            a.mean_reliability,
            a.std_reliability
        );
    }
    out
}

/// JSON mirror of the raw rows.
pub fn rows_json(rows: &[ResultRow]) -> String {
    serde_json::to_string_pretty(rows).expect("serializable")
}

// ---------------------------------------------------------------------------
// Schedule audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AuditCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Signed violation magnitude (positive means violated).
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<24} residual {:>12.3e}  {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.detail
            );
        }
        out
    }
}

const REL_TOL_TIGHT: f64 = 1e-12;
const TOL_LOOSE: f64 = 1e-9;

/// Independently re-derives every claim of an exported schedule against the
/// model: security constraints, timing identities, precedence, per-instance
/// exclusivity, lease consistency, and the cost and reliability totals.
pub fn validate_schedule(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    cons: &SecurityConstraints,
    record: &ScheduleRecord,
) -> AuditReport {
    let mut report = AuditReport::default();
    let pool = sys.build_resource_pool(w);

    // Reconstruct the mapping and cipher assignment; all later checks assume
    // this structural pass succeeded.
    let mut mapping = Mapping::new(w.num_tasks());
    let mut structure_errors = Vec::new();
    let mut seen = vec![false; w.num_tasks()];
    for t in &record.tasks {
        match w.task_index(&t.id) {
            Some(idx) if !w.task(idx).is_virtual => {
                if seen[idx] {
                    structure_errors.push(format!("task `{}` listed twice", t.id));
                }
                seen[idx] = true;
                if t.instance < pool.len() {
                    mapping.set(idx, t.instance);
                } else {
                    structure_errors.push(format!(
                        "task `{}` instance {} outside pool of {}",
                        t.id,
                        t.instance,
                        pool.len()
                    ));
                }
            }
            _ => structure_errors.push(format!("unknown task `{}`", t.id)),
        }
    }
    for (i, task) in w.tasks().iter().enumerate() {
        if !task.is_virtual && !seen[i] {
            structure_errors.push(format!("task `{}` missing from the record", task.id));
        }
    }

    let edge_index: HashMap<(&str, &str), usize> = (0..w.edges().len())
        .map(|e| (w.edge_endpoints(e), e))
        .collect();
    let mut assignment = CipherAssignment::empty(w.edges().len());
    for c in &record.ciphers {
        let Some(&e) = edge_index.get(&(c.src.as_str(), c.dst.as_str())) else {
            structure_errors.push(format!("cipher on unknown edge ({}, {})", c.src, c.dst));
            continue;
        };
        match table.ciphers.iter().position(|row| row.level == c.level) {
            Some(idx) => assignment.choices[e] = Some(idx),
            None => structure_errors.push(format!(
                "cipher level {} on edge ({}, {}) not in the table",
                c.level, c.src, c.dst
            )),
        }
    }
    report.checks.push(AuditCheck {
        name: "structure",
        pass: structure_errors.is_empty(),
        residual: structure_errors.len() as f64,
        detail: structure_errors.join("; "),
    });
    if !report.passed() {
        return report;
    }

    let timing_of: BTreeMap<usize, &crate::eval::TaskRecord> = record
        .tasks
        .iter()
        .map(|t| (w.task_index(&t.id).unwrap(), t))
        .collect();

    // Budget reproduction: the embedded budget must match the rebuilt one.
    {
        let diff = (record.meta.uv_req - cons.system_cap).abs();
        report.checks.push(AuditCheck {
            name: "budget-reproduction",
            pass: diff <= TOL_LOOSE,
            residual: diff,
            detail: format!(
                "recorded {} vs rebuilt {}",
                record.meta.uv_req, cons.system_cap
            ),
        });
    }

    // Cipher coverage on cross-instance edges.
    let cross: Vec<bool> = (0..w.edges().len())
        .map(|e| {
            w.is_real_edge(e) && {
                let edge = &w.edges()[e];
                mapping.get(edge.src) != mapping.get(edge.dst)
            }
        })
        .collect();
    {
        let missing: Vec<String> = (0..w.edges().len())
            .filter(|&e| cross[e] && assignment.choices[e].is_none())
            .map(|e| {
                let (s, d) = w.edge_endpoints(e);
                format!("({s}, {d})")
            })
            .collect();
        report.checks.push(AuditCheck {
            name: "cipher-coverage",
            pass: missing.is_empty(),
            residual: missing.len() as f64,
            detail: missing.join(" "),
        });
        if missing.is_empty() {
            let v = crate::security::system_vulnerability(w, table, &assignment, &cross)
                .expect("coverage checked");
            report.checks.push(AuditCheck {
                name: "system-vulnerability",
                pass: v <= cons.system_cap + TOL_LOOSE,
                residual: v - cons.system_cap,
                detail: format!("weighted vulnerability {v} against budget {}", cons.system_cap),
            });
        }
    }

    // Per-edge caps.
    {
        let mut worst = f64::NEG_INFINITY;
        let mut detail = String::new();
        for (e, choice) in assignment.choices.iter().enumerate() {
            if let Some(c) = choice {
                let excess = table.cipher(*c).vulnerability - w.edges()[e].vuln_cap;
                if excess > worst {
                    worst = excess;
                    let (s, d) = w.edge_endpoints(e);
                    detail = format!("worst edge ({s}, {d})");
                }
            }
        }
        let worst = if worst.is_finite() { worst } else { 0.0 };
        report.checks.push(AuditCheck {
            name: "per-edge-caps",
            pass: worst <= TOL_LOOSE,
            residual: worst,
            detail,
        });
    }

    // Recompute per-task components from the model.
    {
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for (&idx, rec) in &timing_of {
            let comps = match crate::eval::process_task(
                w, sys, table, &pool, &assignment, &mapping, idx,
            ) {
                Ok(c) => c,
                Err(e) => {
                    report.checks.push(AuditCheck {
                        name: "components-recompute",
                        pass: false,
                        residual: f64::INFINITY,
                        detail: format!("recompute failed: {e}"),
                    });
                    return report;
                }
            };
            let exec = sys
                .vm_type(pool[mapping.get(idx).unwrap()].vm_type)
                .exec_time(w.task(idx).work);
            for (name, got, want) in [
                ("dec", rec.dec_s, comps.dec_time),
                ("exec", rec.exec_s, exec),
                ("enc", rec.enc_s, comps.enc_time),
                ("transfer", rec.transfer_s, comps.transfer_time),
            ] {
                let diff = (got - want).abs() / want.abs().max(1.0);
                if diff > worst {
                    worst = diff;
                    detail = format!("task `{}` component {name}", rec.id);
                }
            }
        }
        report.checks.push(AuditCheck {
            name: "components-recompute",
            pass: worst <= TOL_LOOSE,
            residual: worst,
            detail,
        });
    }

    // finish - start must equal the recorded component sum.
    {
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for rec in &record.tasks {
            let pt = rec.dec_s + rec.exec_s + rec.enc_s + rec.transfer_s;
            let diff = ((rec.finish_s - rec.start_s) - pt).abs();
            if diff > worst {
                worst = diff;
                detail = format!("task `{}`", rec.id);
            }
        }
        report.checks.push(AuditCheck {
            name: "processing-identity",
            pass: worst <= TOL_LOOSE,
            residual: worst,
            detail,
        });
    }

    // Precedence along every real edge.
    {
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for (e, edge) in w.edges().iter().enumerate() {
            if !w.is_real_edge(e) {
                continue;
            }
            let src = timing_of[&edge.src];
            let dst = timing_of[&edge.dst];
            let violation = src.finish_s - dst.start_s;
            if violation > worst {
                worst = violation;
                detail = format!("edge ({}, {})", src.id, dst.id);
            }
        }
        report.checks.push(AuditCheck {
            name: "precedence",
            pass: worst <= TOL_LOOSE,
            residual: worst,
            detail,
        });
    }

    // No overlap among tasks sharing an instance.
    {
        let mut by_instance: BTreeMap<usize, Vec<&crate::eval::TaskRecord>> = BTreeMap::new();
        for rec in &record.tasks {
            by_instance.entry(rec.instance).or_default().push(rec);
        }
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for group in by_instance.values_mut() {
            group.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
            for pair in group.windows(2) {
                let overlap = pair[0].finish_s - pair[1].start_s;
                if overlap > worst {
                    worst = overlap;
                    detail = format!("tasks `{}` and `{}`", pair[0].id, pair[1].id);
                }
            }
        }
        report.checks.push(AuditCheck {
            name: "instance-exclusivity",
            pass: worst <= TOL_LOOSE,
            residual: worst,
            detail,
        });
    }

    // Leases: every used instance leased once, spanning boot to last finish.
    {
        let mut problems: Vec<String> = Vec::new();
        let mut lease_of: BTreeMap<usize, &crate::eval::LeaseRecord> = BTreeMap::new();
        for l in &record.leases {
            if lease_of.insert(l.instance, l).is_some() {
                problems.push(format!("instance {} leased twice", l.instance));
            }
        }
        let mut used: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for rec in &record.tasks {
            let entry = used.entry(rec.instance).or_insert((rec.start_s, rec.finish_s));
            entry.0 = entry.0.min(rec.start_s);
            entry.1 = entry.1.max(rec.finish_s);
        }
        for (inst, (first_start, last_finish)) in &used {
            match lease_of.get(inst) {
                None => problems.push(format!("instance {inst} hosts tasks but has no lease")),
                Some(l) => {
                    let boot = sys.vm_type(pool[*inst].vm_type).boot_time;
                    if (l.start_s - (first_start - boot)).abs() > TOL_LOOSE
                        || (l.finish_s - last_finish).abs() > TOL_LOOSE
                    {
                        problems.push(format!(
                            "instance {inst} lease [{}, {}] vs expected [{}, {}]",
                            l.start_s,
                            l.finish_s,
                            first_start - boot,
                            last_finish
                        ));
                    }
                }
            }
        }
        for inst in lease_of.keys() {
            if !used.contains_key(inst) {
                problems.push(format!("instance {inst} leased but hosts no task"));
            }
        }
        report.checks.push(AuditCheck {
            name: "lease-consistency",
            pass: problems.is_empty(),
            residual: problems.len() as f64,
            detail: problems.join("; "),
        });
    }

    // Makespan equals the latest finish.
    {
        let last = record
            .tasks
            .iter()
            .map(|t| t.finish_s)
            .fold(0.0f64, f64::max);
        let diff = (record.makespan_s - last).abs();
        report.checks.push(AuditCheck {
            name: "makespan-identity",
            pass: diff <= TOL_LOOSE * record.makespan_s.abs().max(1.0),
            residual: diff,
            detail: format!("recorded {} vs latest finish {last}", record.makespan_s),
        });
    }

    // Cost decomposition.
    {
        let mut cost = 0.0f64;
        for l in &record.leases {
            match sys.lease_cost(pool[l.instance].vm_type, l.finish_s - l.start_s) {
                Ok(c) => cost += c,
                Err(_) => cost = f64::NAN,
            }
        }
        for (e, edge) in w.edges().iter().enumerate() {
            if !w.is_real_edge(e) {
                continue;
            }
            let src = mapping.get(edge.src).unwrap();
            let dst = mapping.get(edge.dst).unwrap();
            cost += sys.transfer_cost(edge.size, src, dst, &pool);
        }
        let diff = (cost - record.cost_usd).abs() / record.cost_usd.abs().max(1e-9);
        report.checks.push(AuditCheck {
            name: "cost-decomposition",
            pass: diff <= REL_TOL_TIGHT,
            residual: diff,
            detail: format!("recomputed {cost} vs recorded {}", record.cost_usd),
        });
    }

    // Reliability product.
    {
        let mut rel = 1.0f64;
        for (e, edge) in w.edges().iter().enumerate() {
            if !w.is_real_edge(e) {
                continue;
            }
            let src = mapping.get(edge.src).unwrap();
            let dst = mapping.get(edge.dst).unwrap();
            let comm = sys.comm_time(edge.size, src, dst, &pool);
            rel *= sys.link_reliability(src, dst, &pool, comm);
        }
        for l in &record.leases {
            rel *= sys
                .vm_reliability(pool[l.instance].vm_type, (l.finish_s - l.start_s).max(0.0))
                .unwrap_or(f64::NAN);
        }
        let diff = (rel - record.reliability).abs() / record.reliability.abs().max(1e-9);
        let in_range = record.reliability > 0.0 && record.reliability <= 1.0;
        report.checks.push(AuditCheck {
            name: "reliability-product",
            pass: diff <= REL_TOL_TIGHT && in_range,
            residual: diff,
            detail: format!("recomputed {rel} vs recorded {}", record.reliability),
        });
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RunMeta;
    use crate::synth;

    fn context() -> (Workflow, CloudSystem, CipherTable) {
        (
            synth::epigenomics_like(8, 3).augment().unwrap(),
            CloudSystem::default_six_providers(),
            CipherTable::default_rc6(),
        )
    }

    #[test]
    fn seed_derivation_is_stable_and_sensitive() {
        assert_eq!(derive_seed(42, &[1, 2, 3]), derive_seed(42, &[1, 2, 3]));
        assert_ne!(derive_seed(42, &[1, 2, 3]), derive_seed(42, &[1, 3, 2]));
        assert_ne!(derive_seed(42, &[0]), derive_seed(43, &[0]));
    }

    #[test]
    fn sampling_is_deterministic() {
        let (w, sys, table) = context();
        let spec = SamplingSpec::default();
        let mut r1 = ChaCha8Rng::seed_from_u64(11);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        let (w1, s1, c1) = sample_security(&w, &sys, &table, 0.4, &spec, &mut r1);
        let (w2, s2, c2) = sample_security(&w, &sys, &table, 0.4, &spec, &mut r2);
        assert_eq!(w1.edges(), w2.edges());
        assert_eq!(c1.system_cap, c2.system_cap);
        for (a, b) in s1.vm_types().iter().zip(s2.vm_types()) {
            assert_eq!(a.fail_rate, b.fail_rate);
        }
        // Weights are rounded to one decimal and in range; caps come from
        // the table.
        for (e, edge) in w1.edges().iter().enumerate() {
            if !w1.is_real_edge(e) {
                continue;
            }
            let scaled = edge.sec_weight * 10.0;
            assert!((scaled - scaled.round()).abs() < 1e-9);
            assert!((0.1..=1.0).contains(&edge.sec_weight));
            assert!(table.ciphers.iter().any(|c| c.vulnerability == edge.vuln_cap));
        }
    }

    #[test]
    fn eta_zero_forces_zero_budget() {
        let (w, sys, table) = context();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, _, cons) = sample_security(&w, &sys, &table, 0.0, &SamplingSpec::default(), &mut rng);
        assert_eq!(cons.system_cap, 0.0);
    }

    #[test]
    fn budget_on_single_unit_weight_edge() {
        let w = Workflow::new(
            "one-edge",
            vec![("a".into(), 1.0), ("b".into(), 1.0)],
            vec![crate::workflow::EdgeSpec::new("a", "b", 1.0)],
        )
        .unwrap()
        .augment()
        .unwrap();
        let table = CipherTable::default_rc6();
        // Weight fixed at 1.0: budget is eta * 98.
        let spec = SamplingSpec {
            weight_lo: 1.0,
            weight_hi: 1.0,
            ..SamplingSpec::default()
        };
        let sys = CloudSystem::default_six_providers();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, _, cons) = sample_security(&w, &sys, &table, 0.3, &spec, &mut rng);
        assert!((cons.system_cap - 29.4).abs() < 1e-12);
    }

    #[test]
    fn sweep_counts_and_determinism() {
        let sys = CloudSystem::default_six_providers();
        let table = CipherTable::default_rc6();
        // Two algorithms over the seven-point grid, fifteen repetitions.
        let mut cfg = ExperimentConfig::new(vec![synth::epigenomics_like(6, 2)]);
        cfg.repetitions = 15;
        cfg.base_seed = 7;

        let out1 = run_sweep(&cfg, &sys, &table).unwrap();
        assert_eq!(out1.rows.len(), 210);
        assert_eq!(out1.aggregates.len(), 14);
        assert!(out1.rows.iter().all(|r| r.feasible));

        let out2 = run_sweep(&cfg, &sys, &table).unwrap();
        assert_eq!(raw_csv(&out1.rows, false), raw_csv(&out2.rows, false));
        assert_eq!(aggregate_csv(&out1.aggregates), aggregate_csv(&out2.aggregates));
        // Wall-clock stays out of the deterministic payload but exists.
        assert!(raw_csv(&out1.rows, true).contains("wall_ms"));
    }

    fn record_for(
        w: &Workflow,
        sys: &CloudSystem,
        table: &CipherTable,
        cons: &SecurityConstraints,
    ) -> ScheduleRecord {
        let schedule = run_pipeline(
            w,
            sys,
            table,
            cons,
            &SchedulerConfig::default(),
            Algorithm::Lbs,
        )
        .unwrap();
        let pool = sys.build_resource_pool(w);
        ScheduleRecord::from_schedule(
            w,
            sys,
            table,
            &pool,
            &schedule,
            RunMeta {
                algorithm: "lbs".into(),
                eta: 0.5,
                seed: 3,
                uv_req: cons.system_cap,
                scale_digits: cons.scale_digits,
            },
        )
    }

    #[test]
    fn audit_passes_pipeline_output_and_catches_corruption() {
        let (w, sys, table) = context();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (w2, sys2, cons) = sample_security(&w, &sys, &table, 0.5, &SamplingSpec::default(), &mut rng);
        let record = record_for(&w2, &sys2, &table, &cons);

        let report = validate_schedule(&w2, &sys2, &table, &cons, &record);
        assert!(report.passed(), "{}", report.render());

        // Swapping a cipher to the weakest level blows the budget.
        let mut corrupted = record.clone();
        if !corrupted.ciphers.is_empty() {
            for c in &mut corrupted.ciphers {
                c.level = 1;
            }
            let report = validate_schedule(&w2, &sys2, &table, &cons, &corrupted);
            assert!(!report.passed());
            assert!(report
                .checks
                .iter()
                .any(|c| (c.name == "system-vulnerability" || c.name == "per-edge-caps") && !c.pass));
        }

        // Editing the makespan breaks its identity.
        let mut corrupted = record.clone();
        corrupted.makespan_s += 1.0;
        let report = validate_schedule(&w2, &sys2, &table, &cons, &corrupted);
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "makespan-identity" && !c.pass));

        // A foreign task id fails the structural pass.
        let mut corrupted = record.clone();
        corrupted.tasks[0].id = "ghost".into();
        let report = validate_schedule(&w2, &sys2, &table, &cons, &corrupted);
        assert!(!report.passed());
    }
}
