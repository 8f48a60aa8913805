//! Task-to-resource mapping algorithms.
//!
//! The list-based scheduler (LBS) walks tasks bottom-up (deepest topological
//! level first) and scores every pool instance by a min-max normalized
//! combination of cost, processing time and reliability, keeping instances
//! distinct within a level. The iterative local search (LS) then revisits
//! tasks in rank order, re-evaluating the whole schedule for every tentative
//! reassignment. Random and cost-greedy baselines and the end-to-end
//! pipeline (pool, LBS, optional LS, cipher DP, evaluation) live here too.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cipher_assign::{assign_ciphers_dp, assign_ciphers_dp_all_edges};
use crate::cloud::{CloudSystem, VmInstance};
use crate::error::{Error, Result};
use crate::eval::{eval_order, evaluate, evaluate_ordered, Mapping, Schedule};
use crate::security::{CipherAssignment, CipherTable, CryptoCapacityMode, SecurityConstraints};
use crate::workflow::Workflow;

/// Relative importance of cost (`alpha`), time (`beta`) and reliability
/// (`gamma`) in instance scoring.
#[derive(Debug, Clone, Copy)]
pub struct MetricWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MetricWeights {
    /// Cost-leaning weights used by the list scheduler.
    pub fn lbs_default() -> MetricWeights {
        MetricWeights {
            alpha: 0.7,
            beta: 0.2,
            gamma: 0.1,
        }
    }

    /// Weights used by the local search.
    pub fn ls_default() -> MetricWeights {
        MetricWeights {
            alpha: 0.6,
            beta: 0.2,
            gamma: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config("metric weights must be non-negative".into()));
        }
        if self.alpha + self.beta + self.gamma <= 0.0 {
            return Err(Error::Config("metric weights must not all be zero".into()));
        }
        Ok(())
    }
}

/// Scheduler knobs.
#[derive(Debug, Clone)]
pub struct SchedulerConfig {
    pub lbs_weights: MetricWeights,
    pub ls_weights: MetricWeights,
    /// Local-search iteration cap.
    pub num_iter: usize,
    /// Seed for the random baseline.
    pub seed: u64,
    /// Reuse one placement-independent cipher assignment during LS instead
    /// of re-running the DP per tentative move.
    pub frozen_ciphers: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            lbs_weights: MetricWeights::lbs_default(),
            ls_weights: MetricWeights::ls_default(),
            num_iter: 10,
            seed: 42,
            frozen_ciphers: false,
        }
    }
}

/// Mapping algorithms exposed by the pipeline and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Lbs,
    LbsLs,
    Random,
    GreedyCost,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "lbs" => Ok(Algorithm::Lbs),
            "lbs+ls" | "lbs-ls" => Ok(Algorithm::LbsLs),
            "random" => Ok(Algorithm::Random),
            "greedy" => Ok(Algorithm::GreedyCost),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected lbs, lbs+ls, random or greedy)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Lbs => "lbs",
            Algorithm::LbsLs => "lbs+ls",
            Algorithm::Random => "random",
            Algorithm::GreedyCost => "greedy",
        }
    }
}

/// Min-max normalized metric per candidate `(cost, time, reliability)`.
/// Degenerate criteria (max equals min) contribute zero; `None` candidates
/// score infinity and can never be selected.
fn metric_over_candidates(
    candidates: &[Option<(f64, f64, f64)>],
    weights: &MetricWeights,
) -> Vec<f64> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in candidates.iter().flatten() {
        let v = [c.0, c.1, c.2];
        for (i, x) in v.iter().enumerate() {
            lo[i] = lo[i].min(*x);
            hi[i] = hi[i].max(*x);
        }
    }
    let norm = |x: f64, i: usize| {
        if hi[i] > lo[i] {
            (x - lo[i]) / (hi[i] - lo[i])
        } else {
            0.0
        }
    };
    candidates
        .iter()
        .map(|c| match c {
            Some((cost, time, rel)) => {
                weights.alpha * norm(*cost, 0)
                    + weights.beta * norm(*time, 1)
                    + weights.gamma * {
                        // Higher reliability must lower the metric.
                        if hi[2] > lo[2] {
                            (hi[2] - rel) / (hi[2] - lo[2])
                        } else {
                            0.0
                        }
                    }
            }
            None => f64::INFINITY,
        })
        .collect()
}

/// Real tasks ordered for list allocation: deepest level first, rank
/// descending within a level, id as the final tie-break.
fn lbs_task_order(w: &Workflow, levels: &[u32], ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.num_tasks())
        .filter(|&t| !w.task(t).is_virtual)
        .collect();
    order.sort_by(|&a, &b| {
        levels[b]
            .cmp(&levels[a])
            .then(ranks[b].total_cmp(&ranks[a]))
            .then_with(|| w.task(a).id.cmp(&w.task(b).id))
    });
    order
}

/// Scores placing `task` on pool instance `r` given the partial mapping.
/// Ciphers are unknown at this stage, so encryption and decryption count as
/// zero; only outgoing edges contribute (successors are already placed when
/// allocating bottom-up). Cost is the lease bill over the task's processing
/// time plus its transfer fees; reliability combines outgoing links with the
/// instance surviving the processing time.
fn lbs_candidate(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    task: usize,
    r: usize,
) -> Result<(f64, f64, f64)> {
    let vm = sys.vm_type(pool[r].vm_type);
    let exec = vm.exec_time(w.task(task).work);
    let mut transfer_time = 0.0;
    let mut transfer_cost = 0.0;
    let mut rel = 1.0;
    for &e in w.outgoing(task) {
        let edge = &w.edges()[e];
        if w.task(edge.dst).is_virtual {
            continue;
        }
        let other = mapping.require(w, edge.dst)?;
        if other == r {
            continue;
        }
        let comm = sys.comm_time(edge.size, r, other, pool);
        transfer_time += comm;
        transfer_cost += sys.transfer_cost(edge.size, r, other, pool);
        rel *= sys.link_reliability(r, other, pool, comm);
    }
    let pt = exec + transfer_time;
    let cost = sys.lease_cost(pool[r].vm_type, pt)? + transfer_cost;
    let rel = rel * sys.vm_reliability(pool[r].vm_type, pt)?;
    Ok((cost, pt, rel))
}

/// List-based allocation: per task, the best-scoring instance not yet used
/// at the task's topological level.
pub fn lbs_allocate(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    weights: &MetricWeights,
) -> Result<Mapping> {
    assert!(w.is_augmented(), "lbs_allocate requires an augmented workflow");
    weights.validate()?;
    let levels = w.top_level();
    let ranks = w.rank(&sys.avg_exec_times(w), sys.avg_bandwidth());
    let order = lbs_task_order(w, &levels, &ranks);

    let mut mapping = Mapping::new(w.num_tasks());
    let mut used: HashSet<usize> = HashSet::new();
    let mut current_level: Option<u32> = None;
    let mut candidates = Vec::with_capacity(pool.len());
    for &task in &order {
        if current_level != Some(levels[task]) {
            used.clear();
            current_level = Some(levels[task]);
        }
        candidates.clear();
        for r in 0..pool.len() {
            candidates.push(Some(lbs_candidate(w, sys, pool, &mapping, task, r)?));
        }
        let metrics = metric_over_candidates(&candidates, weights);
        let mut by_metric: Vec<usize> = (0..pool.len()).collect();
        by_metric.sort_by(|&a, &b| metrics[a].total_cmp(&metrics[b]));
        let chosen = by_metric
            .into_iter()
            .find(|r| !used.contains(r))
            .ok_or(Error::PoolExhausted {
                level: levels[task],
            })?;
        mapping.set(task, chosen);
        used.insert(chosen);
    }
    Ok(mapping)
}

/// Uniform random instance per task, reproducible from the seed.
pub fn baseline_random(w: &Workflow, pool_len: usize, seed: u64) -> Mapping {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mapping = Mapping::new(w.num_tasks());
    for t in 0..w.num_tasks() {
        if !w.task(t).is_virtual {
            mapping.set(t, rng.random_range(0..pool_len));
        }
    }
    mapping
}

/// List order with a pure lease-plus-transfer cost score and no per-level
/// distinctness; ties go to the lowest pool index.
pub fn baseline_greedy_cost(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
) -> Result<Mapping> {
    assert!(w.is_augmented());
    let levels = w.top_level();
    let ranks = w.rank(&sys.avg_exec_times(w), sys.avg_bandwidth());
    let mut mapping = Mapping::new(w.num_tasks());
    for &task in &lbs_task_order(w, &levels, &ranks) {
        let mut best = 0usize;
        let mut best_cost = f64::INFINITY;
        for r in 0..pool.len() {
            let (cost, _, _) = lbs_candidate(w, sys, pool, &mapping, task, r)?;
            if cost < best_cost {
                best = r;
                best_cost = cost;
            }
        }
        mapping.set(task, best);
    }
    Ok(mapping)
}

/// Local-search outcome counters.
#[derive(Debug, Clone, Copy, Default)]
pub struct LsStats {
    pub iterations: usize,
    pub moves: usize,
    /// Distinct cipher subproblems solved (cache misses in faithful mode).
    pub dp_solves: usize,
}

/// Cache key for cipher subproblems: the set of cross-instance edges, plus
/// endpoint capacities when crypto time depends on them. Placements with the
/// same key have identical DP inputs.
fn dp_cache_key(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    per_capacity: bool,
) -> Vec<u64> {
    let mut key = Vec::with_capacity(w.edges().len());
    for (e, edge) in w.edges().iter().enumerate() {
        if !w.is_real_edge(e) {
            continue;
        }
        let (src, dst) = (
            mapping.get(edge.src).expect("complete mapping"),
            mapping.get(edge.dst).expect("complete mapping"),
        );
        if src == dst {
            continue;
        }
        key.push(e as u64);
        if per_capacity {
            key.push(sys.vm_type(pool[src].vm_type).capacity.to_bits());
            key.push(sys.vm_type(pool[dst].vm_type).capacity.to_bits());
        }
    }
    key
}

/// Iterative local search. Tasks are revisited in decreasing rank order; for
/// each task every instance is tried, the full schedule re-evaluated (with
/// ciphers re-derived per tentative placement unless frozen), and the
/// normalized-metric argmin kept. Terminates after `num_iter` iterations or
/// the first iteration without a move.
pub fn local_search(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    cons: &SecurityConstraints,
    pool: &[VmInstance],
    mut mapping: Mapping,
    cfg: &SchedulerConfig,
) -> Result<(Mapping, LsStats)> {
    assert!(w.is_augmented());
    cfg.ls_weights.validate()?;
    if cfg.num_iter == 0 {
        return Err(Error::Config("num_iter must be at least 1".into()));
    }

    let ranks = w.rank(&sys.avg_exec_times(w), sys.avg_bandwidth());
    let mut order: Vec<usize> = (0..w.num_tasks())
        .filter(|&t| !w.task(t).is_virtual)
        .collect();
    order.sort_by(|&a, &b| {
        ranks[b]
            .total_cmp(&ranks[a])
            .then_with(|| w.task(a).id.cmp(&w.task(b).id))
    });
    let visit_order = eval_order(w, sys);

    let frozen: Option<CipherAssignment> = if cfg.frozen_ciphers {
        Some(assign_ciphers_dp_all_edges(w, sys, pool, &mapping, table, cons)?)
    } else {
        None
    };
    let per_capacity = table.capacity_mode == CryptoCapacityMode::PerCapacity;
    // Infeasible placements cache as None and score infinity.
    let mut cache: HashMap<Vec<u64>, Option<CipherAssignment>> = HashMap::new();
    let mut stats = LsStats::default();

    let mut candidates: Vec<Option<(f64, f64, f64)>> = Vec::with_capacity(pool.len());
    for _ in 0..cfg.num_iter {
        stats.iterations += 1;
        let mut changed = false;
        for &task in &order {
            let current = mapping
                .get(task)
                .ok_or_else(|| Error::Unmapped {
                    task: w.task(task).id.clone(),
                })?;
            candidates.clear();
            for r in 0..pool.len() {
                mapping.set(task, r);
                let assignment: Option<&CipherAssignment> = match &frozen {
                    Some(asg) => Some(asg),
                    None => {
                        let key = dp_cache_key(w, sys, pool, &mapping, per_capacity);
                        if !cache.contains_key(&key) {
                            let solved = match assign_ciphers_dp(w, sys, pool, &mapping, table, cons)
                            {
                                Ok(asg) => Some(asg),
                                Err(Error::Infeasible { .. }) => None,
                                Err(e) => {
                                    mapping.set(task, current);
                                    return Err(e);
                                }
                            };
                            stats.dp_solves += 1;
                            cache.insert(key.clone(), solved);
                        }
                        cache.get(&key).unwrap().as_ref()
                    }
                };
                let objective = match assignment {
                    Some(asg) => {
                        let s = evaluate_ordered(w, sys, table, pool, asg, &mapping, &visit_order)?;
                        Some((s.cost, s.makespan, s.reliability))
                    }
                    None => None,
                };
                candidates.push(objective);
            }
            mapping.set(task, current);

            let metrics = metric_over_candidates(&candidates, &cfg.ls_weights);
            let mut best = 0usize;
            for r in 1..pool.len() {
                if metrics[r] < metrics[best] {
                    best = r;
                }
            }
            if metrics[best].is_infinite() {
                return Err(Error::Infeasible {
                    detail: format!(
                        "no feasible placement for task `{}` during local search",
                        w.task(task).id
                    ),
                });
            }
            // The accepted move never scores worse than the incumbent seat.
            debug_assert!(metrics[best] <= metrics[current] + 1e-12);
            if best != current {
                mapping.set(task, best);
                changed = true;
                stats.moves += 1;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((mapping, stats))
}

/// End-to-end pipeline: reduced pool, mapping algorithm, optional local
/// search, cipher DP for the final mapping, full evaluation.
pub fn run_pipeline(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    cons: &SecurityConstraints,
    cfg: &SchedulerConfig,
    algo: Algorithm,
) -> Result<Schedule> {
    assert!(w.is_augmented(), "pipeline requires an augmented workflow");
    let pool = sys.build_resource_pool(w);
    let mut mapping = match algo {
        Algorithm::Lbs | Algorithm::LbsLs => lbs_allocate(w, sys, &pool, &cfg.lbs_weights)?,
        Algorithm::Random => baseline_random(w, pool.len(), cfg.seed),
        Algorithm::GreedyCost => baseline_greedy_cost(w, sys, &pool)?,
    };
    if algo == Algorithm::LbsLs {
        mapping = local_search(w, sys, table, cons, &pool, mapping, cfg)?.0;
    }
    let assignment = assign_ciphers_dp(w, sys, &pool, &mapping, table, cons)?;
    evaluate(w, sys, table, &pool, &assignment, &mapping)
}
