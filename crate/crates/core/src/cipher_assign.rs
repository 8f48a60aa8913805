//! Budgeted cipher assignment.
//!
//! Given a complete task placement, pick one cipher per cross-instance edge
//! so that total encryption plus decryption time is minimal, the weighted
//! system vulnerability stays within the budget, and each edge respects its
//! own vulnerability cap. The solver is a dense dynamic program over the
//! integer-scaled budget; an exhaustive enumerator doubles as verification
//! oracle on small instances.
//!
//! Weights are rounded to `scale_digits` decimals and multiplied by
//! `10^scale_digits`, making every budget computation exact integer
//! arithmetic. The per-edge cap check compares unscaled vulnerabilities.

use crate::cloud::{CloudSystem, VmInstance};
use crate::error::{Error, Result};
use crate::eval::Mapping;
use crate::security::{CipherAssignment, CipherTable, SecurityConstraints};
use crate::workflow::Workflow;

/// Edge-count limit for the exhaustive oracle.
pub const BRUTE_FORCE_MAX_EDGES: usize = 12;

/// Guard against absurd budget scales blowing up the DP table.
const MAX_DP_CELLS: usize = 400_000_000;

/// Integer-scaled budget arithmetic shared by the DP and the oracle.
#[derive(Debug, Clone)]
pub struct ScaledBudget {
    /// `10^scale_digits`.
    pub scale: u64,
    /// Scaled system budget, floor of `system_cap * scale`.
    pub budget: u64,
    /// Scaled weight per workflow edge.
    pub weights: Vec<u64>,
}

impl ScaledBudget {
    pub fn new(w: &Workflow, cons: &SecurityConstraints) -> Result<ScaledBudget> {
        if cons.system_cap < 0.0 {
            return Err(Error::Infeasible {
                detail: format!("negative system vulnerability budget {}", cons.system_cap),
            });
        }
        let scale = 10u64.pow(cons.scale_digits);
        let weights = w
            .edges()
            .iter()
            .map(|e| (e.sec_weight * scale as f64).round() as u64)
            .collect();
        // The epsilon absorbs float dust on products that are exact in
        // decimal arithmetic (weights are multiples of 10^-scale_digits).
        let budget = (cons.system_cap * scale as f64 + 1e-9).floor() as u64;
        Ok(ScaledBudget {
            scale,
            budget,
            weights,
        })
    }
}

/// One admissible cipher choice for an edge.
#[derive(Debug, Clone, Copy)]
struct ChoiceOption {
    cipher: usize,
    /// Scaled weighted vulnerability.
    contrib: u64,
    /// Encryption plus decryption time, seconds.
    time: f64,
}

/// One edge of the crypto subproblem with its cap-admissible options.
#[derive(Debug, Clone)]
struct CryptoEdge {
    /// Workflow edge index.
    edge: usize,
    /// Options ordered by ascending vulnerability (table order for the
    /// oracle's lexicographic enumeration is rebuilt separately).
    options: Vec<ChoiceOption>,
}

/// Collects the cross-instance edges and their admissible cipher options.
/// With `force_all_cross` every real edge participates regardless of
/// placement (used to pre-assign ciphers valid for any later placement).
fn crypto_edges(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    scaled: &ScaledBudget,
    force_all_cross: bool,
) -> Result<Vec<CryptoEdge>> {
    let mut out = Vec::new();
    for (e, edge) in w.edges().iter().enumerate() {
        if !w.is_real_edge(e) {
            continue;
        }
        let src = mapping.require(w, edge.src)?;
        let dst = mapping.require(w, edge.dst)?;
        if src == dst && !force_all_cross {
            continue;
        }
        let enc_cap = sys.vm_type(pool[src].vm_type).capacity;
        let dec_cap = sys.vm_type(pool[dst].vm_type).capacity;
        let mut options: Vec<ChoiceOption> = table
            .ciphers
            .iter()
            .enumerate()
            .filter(|(_, c)| c.vulnerability <= edge.vuln_cap)
            .map(|(i, c)| ChoiceOption {
                cipher: i,
                contrib: (scaled.weights[e] as f64 * c.vulnerability).round() as u64,
                time: table.crypto_time(edge.size, c, enc_cap, false)
                    + table.crypto_time(edge.size, c, dec_cap, false),
            })
            .collect();
        if options.is_empty() {
            let (s, d) = w.edge_endpoints(e);
            return Err(Error::Infeasible {
                detail: format!(
                    "no cipher satisfies the vulnerability cap {} on edge ({s}, {d})",
                    edge.vuln_cap
                ),
            });
        }
        options.sort_by(|a, b| {
            table
                .cipher(a.cipher)
                .vulnerability
                .total_cmp(&table.cipher(b.cipher).vulnerability)
                .then(a.cipher.cmp(&b.cipher))
        });
        out.push(CryptoEdge { edge: e, options });
    }
    Ok(out)
}

/// The filled DP table. Row `h` holds, for every scaled budget `b`, the
/// least total crypto time over the first `h + 1` crypto edges; infeasible
/// entries are `+inf` with no cipher.
#[derive(Debug)]
pub struct DpTable {
    times: Vec<Vec<f64>>,
    edges: Vec<CryptoEdge>,
    budget: u64,
}

impl DpTable {
    /// Number of edges participating in the DP.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Effective scaled budget (the requested budget clamped to the largest
    /// achievable weighted vulnerability, beyond which rows are constant).
    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// `(best_time, best_cipher)` at row `h`, scaled budget `b`.
    pub fn entry(&self, h: usize, b: u64) -> (f64, Option<usize>) {
        let b = b as usize;
        let time = self.times[h][b];
        if !time.is_finite() {
            return (f64::INFINITY, None);
        }
        let cipher = self.witness(h, b).map(|o| o.cipher);
        (time, cipher)
    }

    /// The lowest-vulnerability option reproducing `times[h][b]`.
    fn witness(&self, h: usize, b: usize) -> Option<ChoiceOption> {
        let target = self.times[h][b];
        for opt in &self.edges[h].options {
            let c = opt.contrib as usize;
            if c > b {
                continue;
            }
            let cand = if h == 0 {
                opt.time
            } else {
                self.times[h - 1][b - c] + opt.time
            };
            if cand == target {
                return Some(*opt);
            }
        }
        None
    }
}

fn solve(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    cons: &SecurityConstraints,
    force_all_cross: bool,
) -> Result<(CipherAssignment, DpTable)> {
    let scaled = ScaledBudget::new(w, cons)?;
    let edges = crypto_edges(w, sys, pool, mapping, table, &scaled, force_all_cross)?;
    if edges.is_empty() {
        return Ok((
            CipherAssignment::empty(w.edges().len()),
            DpTable {
                times: Vec::new(),
                edges,
                budget: scaled.budget,
            },
        ));
    }

    // Rows are constant above the largest achievable contribution sum, so
    // the budget axis can stop there.
    let max_sum: u64 = edges
        .iter()
        .map(|e| e.options.iter().map(|o| o.contrib).max().unwrap_or(0))
        .sum();
    let budget = scaled.budget.min(max_sum);
    let width = budget as usize + 1;
    if edges.len().saturating_mul(width) > MAX_DP_CELLS {
        return Err(Error::Config(format!(
            "cipher DP table of {} edges x {} budgets is too large; lower scale_digits or the budget",
            edges.len(),
            width
        )));
    }

    let mut times: Vec<Vec<f64>> = Vec::with_capacity(edges.len());
    for (h, ce) in edges.iter().enumerate() {
        let mut row = vec![f64::INFINITY; width];
        if h == 0 {
            // Options arrive in ascending vulnerability; strict improvement
            // keeps the lowest-vulnerability cipher on time ties.
            for opt in &ce.options {
                for slot in row.iter_mut().skip(opt.contrib as usize) {
                    if opt.time < *slot {
                        *slot = opt.time;
                    }
                }
            }
        } else {
            let prev = &times[h - 1];
            for opt in &ce.options {
                let c = opt.contrib as usize;
                let t = opt.time;
                for b in c..width {
                    let cand = prev[b - c] + t;
                    if cand < row[b] {
                        row[b] = cand;
                    }
                }
            }
        }
        times.push(row);
    }

    let total = times.last().unwrap()[budget as usize];
    if !total.is_finite() {
        let min_sum: u64 = edges
            .iter()
            .map(|e| e.options.iter().map(|o| o.contrib).min().unwrap_or(0))
            .sum();
        return Err(Error::Infeasible {
            detail: format!(
                "system vulnerability budget {} is below the minimum achievable {} \
                 (scaled {} < {})",
                cons.system_cap,
                min_sum as f64 / scaled.scale as f64,
                scaled.budget,
                min_sum
            ),
        });
    }

    let dp = DpTable {
        times,
        edges,
        budget,
    };

    // Recover choices in reverse edge order, descending through budgets.
    let mut assignment = CipherAssignment::empty(w.edges().len());
    let mut b = budget as usize;
    for h in (0..dp.edges.len()).rev() {
        let opt = dp
            .witness(h, b)
            .expect("finite dp entry always has a witness option");
        assignment.choices[dp.edges[h].edge] = Some(opt.cipher);
        b -= opt.contrib as usize;
    }
    assignment.total_crypto_time = total;
    Ok((assignment, dp))
}

/// Minimum-time cipher assignment for the cross-instance edges under the
/// given placement, via the dense DP.
pub fn assign_ciphers_dp(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    cons: &SecurityConstraints,
) -> Result<CipherAssignment> {
    solve(w, sys, pool, mapping, table, cons, false).map(|(a, _)| a)
}

/// [`assign_ciphers_dp`] also returning the filled table.
pub fn assign_ciphers_dp_with_table(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    cons: &SecurityConstraints,
) -> Result<(CipherAssignment, DpTable)> {
    solve(w, sys, pool, mapping, table, cons, false)
}

/// DP over every real edge regardless of co-location. The result satisfies
/// the budget for any placement (co-located edges then contribute zero), so
/// it can serve as a frozen assignment while placements move.
pub fn assign_ciphers_dp_all_edges(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    cons: &SecurityConstraints,
) -> Result<CipherAssignment> {
    solve(w, sys, pool, mapping, table, cons, true).map(|(a, _)| a)
}

/// Exhaustive oracle: enumerates every cap-admissible cipher combination in
/// lexicographic order of level vectors and keeps the first minimum-time
/// feasible one. Also returns the number of combinations examined.
pub fn bruteforce_with_stats(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    cons: &SecurityConstraints,
) -> Result<(CipherAssignment, u64)> {
    let scaled = ScaledBudget::new(w, cons)?;
    let edges = crypto_edges(w, sys, pool, mapping, table, &scaled, false)?;
    if edges.len() > BRUTE_FORCE_MAX_EDGES {
        return Err(Error::TooLarge {
            edges: edges.len(),
            max: BRUTE_FORCE_MAX_EDGES,
        });
    }
    if edges.is_empty() {
        return Ok((CipherAssignment::empty(w.edges().len()), 0));
    }

    // Candidates in table (level) order so the odometer walks level vectors
    // lexicographically.
    let candidates: Vec<Vec<ChoiceOption>> = edges
        .iter()
        .map(|ce| {
            let mut opts = ce.options.clone();
            opts.sort_by_key(|o| o.cipher);
            opts
        })
        .collect();

    let mut indices = vec![0usize; candidates.len()];
    let mut examined = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        examined += 1;
        let mut contrib = 0u64;
        let mut time = 0.0f64;
        for (i, cands) in candidates.iter().enumerate() {
            let opt = &cands[indices[i]];
            contrib += opt.contrib;
            time += opt.time;
        }
        if contrib <= scaled.budget && best.as_ref().is_none_or(|(t, _)| time < *t) {
            best = Some((time, indices.clone()));
        }

        // Advance the odometer, rightmost digit fastest.
        let mut pos = candidates.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < candidates[pos].len() {
                break;
            }
            indices[pos] = 0;
        }
        if pos == 0 && indices[0] == 0 {
            break;
        }
    }

    let Some((time, choice)) = best else {
        return Err(Error::Infeasible {
            detail: format!(
                "no cipher combination satisfies the system budget {}",
                cons.system_cap
            ),
        });
    };
    let mut assignment = CipherAssignment::empty(w.edges().len());
    for (i, ce) in edges.iter().enumerate() {
        assignment.choices[ce.edge] = Some(candidates[i][choice[i]].cipher);
    }
    assignment.total_crypto_time = time;
    Ok((assignment, examined))
}

/// Exhaustive minimum-time feasible assignment (instances of at most
/// [`BRUTE_FORCE_MAX_EDGES`] cross-instance edges).
pub fn assign_ciphers_bruteforce(
    w: &Workflow,
    sys: &CloudSystem,
    pool: &[VmInstance],
    mapping: &Mapping,
    table: &CipherTable,
    cons: &SecurityConstraints,
) -> Result<CipherAssignment> {
    bruteforce_with_stats(w, sys, pool, mapping, table, cons).map(|(a, _)| a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::cross_instance_edges;
    use crate::security::{system_vulnerability, Cipher, CryptoCapacityMode};
    use crate::workflow::EdgeSpec;
    use rand::{Rng, SeedableRng};

    fn setup(
        edges: Vec<EdgeSpec>,
        num_tasks: usize,
        spread: bool,
    ) -> (Workflow, CloudSystem, Vec<VmInstance>, Mapping) {
        let tasks = (0..num_tasks).map(|i| (format!("t{i:02}"), 10.0)).collect();
        let w = Workflow::new("w", tasks, edges).unwrap().augment().unwrap();
        let sys = CloudSystem::default_six_providers();
        let pool = sys.build_resource_pool(&w);
        let mut mapping = Mapping::new(w.num_tasks());
        for (i, t) in w.tasks().iter().enumerate() {
            if !t.is_virtual {
                let idx = w.task_index(&t.id).unwrap();
                mapping.set(idx, if spread { i % pool.len() } else { 0 });
            }
        }
        (w, sys, pool, mapping)
    }

    fn constraints(cap: f64) -> SecurityConstraints {
        SecurityConstraints::new(cap)
    }

    #[test]
    fn single_edge_wide_budget_picks_fastest_cipher() {
        let (w, sys, pool, mapping) = setup(
            vec![EdgeSpec {
                src: "t00".into(),
                dst: "t01".into(),
                size: 1.28,
                sec_weight: Some(1.0),
                vuln_cap: Some(98.0),
            }],
            2,
            true,
        );
        let table = CipherTable::default_rc6();
        let asg = assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &constraints(98.0)).unwrap();
        let e = (0..w.edges().len()).find(|&e| w.is_real_edge(e)).unwrap();
        // Level 1 has the smallest block time of the admissible set.
        assert_eq!(asg.choices[e], Some(0));
        let oracle =
            assign_ciphers_bruteforce(&w, &sys, &pool, &mapping, &table, &constraints(98.0))
                .unwrap();
        assert_eq!(asg.total_crypto_time, oracle.total_crypto_time);
    }

    #[test]
    fn zero_budget_forces_strongest_cipher() {
        let (w, sys, pool, mapping) = setup(
            vec![EdgeSpec::new("t00", "t01", 1.28)],
            2,
            true,
        );
        let table = CipherTable::default_rc6();
        let asg = assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &constraints(0.0)).unwrap();
        let e = (0..w.edges().len()).find(|&e| w.is_real_edge(e)).unwrap();
        assert_eq!(asg.choices[e], Some(4));
    }

    #[test]
    fn colocated_edges_yield_empty_assignment() {
        let (w, sys, pool, mapping) = setup(
            vec![EdgeSpec::new("t00", "t01", 50.0)],
            2,
            false,
        );
        let table = CipherTable::default_rc6();
        let asg = assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &constraints(10.0)).unwrap();
        assert!(asg.choices.iter().all(Option::is_none));
        assert_eq!(asg.total_crypto_time, 0.0);
    }

    #[test]
    fn three_edges_match_oracle() {
        let specs = vec![
            EdgeSpec {
                src: "t00".into(),
                dst: "t01".into(),
                size: 10.0,
                sec_weight: Some(0.5),
                vuln_cap: None,
            },
            EdgeSpec {
                src: "t00".into(),
                dst: "t02".into(),
                size: 25.0,
                sec_weight: Some(0.5),
                vuln_cap: None,
            },
            EdgeSpec {
                src: "t01".into(),
                dst: "t03".into(),
                size: 5.0,
                sec_weight: Some(1.0),
                vuln_cap: None,
            },
        ];
        let (w, sys, pool, mapping) = setup(specs, 4, true);
        let table = CipherTable::default_rc6();
        let vmax = crate::security::max_vulnerability(&w, &table);
        let cons = constraints(0.3 * vmax);
        let dp = assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &cons).unwrap();
        let bf = assign_ciphers_bruteforce(&w, &sys, &pool, &mapping, &table, &cons).unwrap();
        assert!((dp.total_crypto_time - bf.total_crypto_time).abs() < 1e-12);

        let cross = cross_instance_edges(&w, &mapping).unwrap();
        let v = system_vulnerability(&w, &table, &dp, &cross).unwrap();
        assert!(v <= cons.system_cap + 1e-9);
    }

    #[test]
    fn oracle_examines_full_product() {
        let (w, sys, pool, mapping) = setup(
            vec![
                EdgeSpec::new("t00", "t01", 1.0),
                EdgeSpec::new("t01", "t02", 2.0),
            ],
            3,
            true,
        );
        let table = CipherTable::default_rc6();
        let (_, examined) =
            bruteforce_with_stats(&w, &sys, &pool, &mapping, &table, &constraints(500.0)).unwrap();
        assert_eq!(examined, 25);
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let specs: Vec<EdgeSpec> = (0..13)
            .map(|i| EdgeSpec::new("t00", format!("t{:02}", i + 1), 1.0))
            .collect();
        let (w, sys, pool, mapping) = setup(specs, 14, true);
        let table = CipherTable::default_rc6();
        assert!(matches!(
            assign_ciphers_bruteforce(&w, &sys, &pool, &mapping, &table, &constraints(1000.0)),
            Err(Error::TooLarge { edges: 13, max: 12 })
        ));
    }

    #[test]
    fn negative_budget_is_infeasible_for_both_routes() {
        let (w, sys, pool, mapping) = setup(vec![EdgeSpec::new("t00", "t01", 1.0)], 2, true);
        let table = CipherTable::default_rc6();
        assert!(matches!(
            assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &constraints(-1.0)),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(
            assign_ciphers_bruteforce(&w, &sys, &pool, &mapping, &table, &constraints(-1.0)),
            Err(Error::Infeasible { .. })
        ));
    }

    /// A table without a zero-vulnerability cipher can make caps or budgets
    /// unsatisfiable.
    fn weak_table() -> CipherTable {
        CipherTable {
            ciphers: vec![
                Cipher {
                    level: 1,
                    rounds: 4,
                    plaintexts_log2: 29,
                    vulnerability: 10.0,
                    block_time_us: 1.0,
                },
                Cipher {
                    level: 2,
                    rounds: 8,
                    plaintexts_log2: 61,
                    vulnerability: 5.0,
                    block_time_us: 2.0,
                },
            ],
            block_size_bits: 128.0,
            capacity_mode: CryptoCapacityMode::Normalized,
        }
    }

    #[test]
    fn unsatisfiable_per_edge_cap_names_the_edge() {
        let (w, sys, pool, mapping) = setup(
            vec![EdgeSpec {
                src: "t00".into(),
                dst: "t01".into(),
                size: 1.0,
                sec_weight: Some(1.0),
                vuln_cap: Some(3.0),
            }],
            2,
            true,
        );
        let err = assign_ciphers_dp(&w, &sys, &pool, &mapping, &weak_table(), &constraints(50.0))
            .unwrap_err();
        match err {
            Error::Infeasible { detail } => {
                assert!(detail.contains("t00"));
                assert!(detail.contains("cap"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsatisfiable_budget_reports_minimum() {
        let (w, sys, pool, mapping) = setup(
            vec![
                EdgeSpec::new("t00", "t01", 1.0),
                EdgeSpec::new("t01", "t02", 1.0),
            ],
            3,
            true,
        );
        // Minimum achievable is 2 x 1.0 x 5 = 10.
        let err = assign_ciphers_dp(&w, &sys, &pool, &mapping, &weak_table(), &constraints(4.0))
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn dp_rows_are_monotone_and_infinite_entries_have_no_cipher() {
        let (w, sys, pool, mapping) = setup(
            vec![
                EdgeSpec {
                    src: "t00".into(),
                    dst: "t01".into(),
                    size: 10.0,
                    sec_weight: Some(0.7),
                    vuln_cap: None,
                },
                EdgeSpec {
                    src: "t01".into(),
                    dst: "t02".into(),
                    size: 4.0,
                    sec_weight: Some(0.3),
                    vuln_cap: None,
                },
            ],
            3,
            true,
        );
        let table = CipherTable::default_rc6();
        let (_, dp) = assign_ciphers_dp_with_table(
            &w,
            &sys,
            &pool,
            &mapping,
            &table,
            &constraints(40.0),
        )
        .unwrap();
        for h in 0..dp.num_edges() {
            let mut prev = f64::INFINITY;
            for b in 0..=dp.budget() {
                let (t, cipher) = dp.entry(h, b);
                assert!(t <= prev);
                assert_eq!(t.is_finite(), cipher.is_some());
                prev = t;
            }
        }
    }

    #[test]
    fn loosening_the_budget_never_increases_the_objective() {
        let specs = vec![
            EdgeSpec {
                src: "t00".into(),
                dst: "t01".into(),
                size: 12.0,
                sec_weight: Some(0.4),
                vuln_cap: None,
            },
            EdgeSpec {
                src: "t00".into(),
                dst: "t02".into(),
                size: 3.0,
                sec_weight: Some(0.9),
                vuln_cap: None,
            },
            EdgeSpec {
                src: "t02".into(),
                dst: "t03".into(),
                size: 7.5,
                sec_weight: Some(0.2),
                vuln_cap: None,
            },
        ];
        let (w, sys, pool, mapping) = setup(specs, 4, true);
        let table = CipherTable::default_rc6();
        let vmax = crate::security::max_vulnerability(&w, &table);
        let mut prev = f64::INFINITY;
        for eta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7] {
            let asg =
                assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &constraints(eta * vmax))
                    .unwrap();
            assert!(asg.total_crypto_time <= prev + 1e-12);
            prev = asg.total_crypto_time;
        }
    }

    #[test]
    fn randomized_dp_equals_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        let base_table = CipherTable::default_rc6();
        for round in 0..40 {
            let num_edges = rng.random_range(1..=6usize);
            let num_tasks = 2 * num_edges;
            let specs: Vec<EdgeSpec> = (0..num_edges)
                .map(|i| EdgeSpec {
                    src: format!("t{:02}", 2 * i),
                    dst: format!("t{:02}", 2 * i + 1),
                    size: rng.random_range(0.5..50.0),
                    sec_weight: Some((rng.random_range(0.1..=1.0f64) * 10.0).round() / 10.0),
                    vuln_cap: Some(
                        base_table.ciphers[rng.random_range(0..base_table.len())].vulnerability,
                    ),
                })
                .collect();
            let (w, sys, pool, mapping) = setup(specs, num_tasks, true);
            let mut table = base_table.clone();
            if round % 2 == 1 {
                table.capacity_mode = CryptoCapacityMode::PerCapacity;
            }
            let vmax = crate::security::max_vulnerability(&w, &table);
            let cons = constraints(rng.random_range(0.0..=1.0) * vmax);

            let dp = assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &cons).unwrap();
            let bf = assign_ciphers_bruteforce(&w, &sys, &pool, &mapping, &table, &cons).unwrap();
            let scale = dp.total_crypto_time.abs().max(1e-30);
            assert!(
                (dp.total_crypto_time - bf.total_crypto_time).abs() / scale < 1e-9,
                "round {round}: dp {} vs oracle {}",
                dp.total_crypto_time,
                bf.total_crypto_time
            );

            // Post-hoc feasibility in unscaled arithmetic.
            let cross = cross_instance_edges(&w, &mapping).unwrap();
            let v = system_vulnerability(&w, &table, &dp, &cross).unwrap();
            assert!(v <= cons.system_cap + 1e-9);
            for (e, choice) in dp.choices.iter().enumerate() {
                if let Some(c) = choice {
                    assert!(table.cipher(*c).vulnerability <= w.edges()[e].vuln_cap);
                }
            }
        }
    }
}
