//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcws_core::cipher_assign::{assign_ciphers_bruteforce, assign_ciphers_dp};
use mcws_core::cloud::{BillingScheme, CloudConfig, CloudSystem, ProviderConfig, VmTypeConfig};
use mcws_core::eval::{cross_instance_edges, evaluate, Mapping, RunMeta, ScheduleRecord};
use mcws_core::experiment::{
    derive_seed, eta_grid_default, raw_csv, run_sweep, sample_security, validate_schedule,
    ExperimentConfig, SamplingSpec,
};
use mcws_core::scheduler::{
    baseline_random, lbs_allocate, run_pipeline, Algorithm, MetricWeights, SchedulerConfig,
};
use mcws_core::security::{
    max_vulnerability, system_vulnerability, CipherTable, CryptoCapacityMode, SecurityConstraints,
};
use mcws_core::synth::{cybershake_like, epigenomics_like};
use mcws_core::workflow::{EdgeSpec, Workflow};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: the cipher DP matches the exhaustive oracle exactly on 200
/// random instances of up to 8 cross-instance edges, produces feasible
/// assignments, and the whole comparison finishes within 5 seconds.
#[test]
fn criterion_01_dp_matches_oracle() {
    let started = Instant::now();
    let sys = CloudSystem::default_six_providers();
    let base_table = CipherTable::default_rc6();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_001);
    let mut worst_rel_diff = 0.0f64;

    for round in 0..200 {
        let edges = rng.random_range(1..=8usize);
        let tasks: Vec<(String, f64)> = (0..2 * edges)
            .map(|i| (format!("t{i:02}"), rng.random_range(1.0..200.0)))
            .collect();
        let specs: Vec<EdgeSpec> = (0..edges)
            .map(|i| EdgeSpec {
                src: format!("t{:02}", 2 * i),
                dst: format!("t{:02}", 2 * i + 1),
                size: rng.random_range(0.5..80.0),
                sec_weight: Some((rng.random_range(0.1..=1.0f64) * 10.0).round() / 10.0),
                vuln_cap: Some(
                    base_table.ciphers[rng.random_range(0..base_table.len())].vulnerability,
                ),
            })
            .collect();
        let w = Workflow::new("rand", tasks, specs).unwrap().augment().unwrap();
        let pool = sys.build_resource_pool(&w);
        let mut mapping = Mapping::new(w.num_tasks());
        for (i, t) in w.tasks().iter().enumerate() {
            if !t.is_virtual {
                mapping.set(i, i % pool.len());
            }
        }
        let mut table = base_table.clone();
        if round % 2 == 1 {
            table.capacity_mode = CryptoCapacityMode::PerCapacity;
        }
        let cons = SecurityConstraints::new(rng.random_range(0.0..=1.0) * max_vulnerability(&w, &table));

        let dp = assign_ciphers_dp(&w, &sys, &pool, &mapping, &table, &cons).unwrap();
        let oracle = assign_ciphers_bruteforce(&w, &sys, &pool, &mapping, &table, &cons).unwrap();
        let scale = oracle.total_crypto_time.abs().max(1e-30);
        worst_rel_diff =
            worst_rel_diff.max((dp.total_crypto_time - oracle.total_crypto_time).abs() / scale);

        let cross = cross_instance_edges(&w, &mapping).unwrap();
        let v = system_vulnerability(&w, &table, &dp, &cross).unwrap();
        assert!(v <= cons.system_cap + 1e-9, "round {round}: budget violated");
        for (e, choice) in dp.choices.iter().enumerate() {
            if let Some(c) = choice {
                assert!(table.cipher(*c).vulnerability <= w.edges()[e].vuln_cap);
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    report(
        "1 (dp-vs-oracle)",
        worst_rel_diff < 1e-9 && elapsed < 5.0,
        &format!("200 instances, worst relative diff {worst_rel_diff:.3e}, {elapsed:.2} s"),
    );
}

/// Criterion 2: over one thousand pipeline runs across both bundled
/// workflow families and the full budget-factor grid, the audit finds zero
/// violations of the system budget or the per-edge caps.
#[test]
fn criterion_02_constraint_audit() {
    let sys = CloudSystem::default_six_providers();
    let table = CipherTable::default_rc6();

    let mut cfg = ExperimentConfig::new(vec![epigenomics_like(24, 901), cybershake_like(30, 902)]);
    cfg.algorithms = vec![Algorithm::Lbs, Algorithm::Random];
    cfg.repetitions = 36;
    cfg.base_seed = 77;
    let bulk = run_sweep(&cfg, &sys, &table).unwrap();

    let mut ls_cfg = ExperimentConfig::new(vec![epigenomics_like(24, 901)]);
    ls_cfg.algorithms = vec![Algorithm::LbsLs];
    ls_cfg.repetitions = 2;
    ls_cfg.base_seed = 78;
    let ls = run_sweep(&ls_cfg, &sys, &table).unwrap();

    let runs = bulk.rows.len() + ls.rows.len();
    let violations = bulk
        .rows
        .iter()
        .chain(&ls.rows)
        .filter(|r| !r.feasible)
        .count();
    report(
        "2 (constraint-audit)",
        runs >= 1000 && violations == 0,
        &format!("{runs} audited runs, {violations} violations"),
    );
}

/// Criterion 3: billing step functions hit the tabulated prices exactly.
#[test]
fn criterion_03_pricing_steps() {
    let sys = CloudSystem::default_six_providers();
    let find = |name: &str| {
        sys.vm_types()
            .iter()
            .position(|t| t.name.ends_with(name))
            .unwrap()
    };
    let ma = find("B2MS");
    let aws = find("m1.small");
    let gcp = find("n1-highcpu-2");

    let pass = sys.lease_cost(ma, 59.0).unwrap() == 0.0015
        && sys.lease_cost(ma, 60.0).unwrap() == 0.0015
        && sys.lease_cost(ma, 61.0).unwrap() == 2.0 * 0.0015
        && sys.lease_cost(aws, 3600.0).unwrap() == 0.06
        && sys.lease_cost(aws, 3601.0).unwrap() == 2.0 * 0.06
        && sys.lease_cost(gcp, 600.0).unwrap() == 0.014
        && sys.lease_cost(gcp, 720.0).unwrap() == 0.014 + 2.0 * 0.0012;
    report("3 (pricing-steps)", pass, "per-minute, per-hour and hybrid boundaries");
}

/// Criterion 4: the single-task hand trace lands exactly on 197 s and
/// 0.006 USD.
#[test]
fn criterion_04_golden_trace() {
    let sys = CloudConfig {
        providers: vec![ProviderConfig {
            id: "p".into(),
            brand: "MA".into(),
            scheme: BillingScheme::PerMinute,
            internal_bw_mbps: 20.0,
            link_fail_rate: 1e-8,
            center_transfer_usd_per_gb: 0.08,
        }],
        vm_types: vec![VmTypeConfig {
            name: "unit".into(),
            provider: "p".into(),
            capacity_mips: 1.0,
            price_usd: 0.0015,
            hybrid_base_usd: None,
            boot_time_s: 97.0,
            fail_rate: 1e-8,
        }],
        external_bw_mbps: 100.0,
        external_link_fail_rate: 1e-8,
        egress_tiers: Default::default(),
        cipher_table: None,
    }
    .build()
    .unwrap();
    let w = Workflow::new("one", vec![("t".into(), 100.0)], vec![])
        .unwrap()
        .augment()
        .unwrap();
    let pool = sys.build_resource_pool(&w);
    let table = CipherTable::default_rc6();
    let mut mapping = Mapping::new(w.num_tasks());
    mapping.set(w.task_index("t").unwrap(), 0);
    let asg = mcws_core::security::CipherAssignment::empty(w.edges().len());
    let s = evaluate(&w, &sys, &table, &pool, &asg, &mapping).unwrap();

    let pass = s.makespan == 197.0 && s.cost == 4.0 * 0.0015 && (s.cost - 0.006).abs() < 1e-15;
    report(
        "4 (golden-trace)",
        pass,
        &format!("makespan {} s, cost {} USD", s.makespan, s.cost),
    );
}

/// Criterion 5: 500 random mappings keep every structural invariant and
/// their cost/reliability totals match an independent recomputation to
/// 1e-12 relative.
#[test]
fn criterion_05_structural_invariants() {
    let sys = CloudSystem::default_six_providers();
    let table = CipherTable::default_rc6();
    let families = [epigenomics_like(24, 31).augment().unwrap(), cybershake_like(30, 32).augment().unwrap()];

    let mut audited = 0usize;
    for round in 0..500 {
        let w = &families[round % 2];
        let seed = derive_seed(5_000, &[round as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = rng.random_range(0.1..=0.7);
        let (w2, sys2, cons) = sample_security(w, &sys, &table, eta, &SamplingSpec::default(), &mut rng);
        let pool = sys2.build_resource_pool(&w2);
        let mapping = baseline_random(&w2, pool.len(), seed);
        let asg = assign_ciphers_dp(&w2, &sys2, &pool, &mapping, &table, &cons).unwrap();
        let schedule = evaluate(&w2, &sys2, &table, &pool, &asg, &mapping).unwrap();

        // Direct invariants.
        assert_eq!(schedule.makespan, schedule.timings[w2.exit()].finish);
        let latest = schedule
            .timings
            .iter()
            .map(|t| t.finish)
            .fold(0.0f64, f64::max);
        assert_eq!(schedule.makespan, latest);
        assert!(schedule.reliability > 0.0 && schedule.reliability <= 1.0);

        // Full audit, including the 1e-12 cost/reliability recomputation.
        let record = ScheduleRecord::from_schedule(
            &w2,
            &sys2,
            &table,
            &pool,
            &schedule,
            RunMeta {
                algorithm: "random".into(),
                eta,
                seed,
                uv_req: cons.system_cap,
                scale_digits: cons.scale_digits,
            },
        );
        let audit = validate_schedule(&w2, &sys2, &table, &cons, &record);
        assert!(audit.passed(), "round {round}:\n{}", audit.render());
        audited += 1;
    }
    report(
        "5 (structural-invariants)",
        audited == 500,
        &format!("{audited} random mappings audited"),
    );
}

/// Criterion 6: LBS never reuses an instance within a topological level.
#[test]
fn criterion_06_lbs_level_distinctness() {
    let sys = CloudSystem::default_six_providers();
    let mut checked = 0usize;
    for w in [
        epigenomics_like(24, 61),
        epigenomics_like(100, 62),
        cybershake_like(30, 63),
        cybershake_like(100, 64),
    ] {
        let w = w.augment().unwrap();
        let pool = sys.build_resource_pool(&w);
        let mapping = lbs_allocate(&w, &sys, &pool, &MetricWeights::lbs_default()).unwrap();
        let levels = w.top_level();
        let mut per_level: std::collections::HashMap<u32, std::collections::HashSet<usize>> =
            Default::default();
        for t in 0..w.num_tasks() {
            if w.task(t).is_virtual {
                continue;
            }
            assert!(
                per_level
                    .entry(levels[t])
                    .or_default()
                    .insert(mapping.get(t).unwrap()),
                "{}: instance reused within level {}",
                w.name(),
                levels[t]
            );
        }
        checked += 1;
    }
    report(
        "6 (lbs-level-distinctness)",
        checked == 4,
        "four bundled workflows",
    );
}

/// Criterion 7: loosening the budget factor from 0.1 to 0.7 does not raise
/// mean makespan or cost and does not lower mean reliability (15 paired
/// seeds, Epigenomics-like n=24).
#[test]
fn criterion_07_eta_trend() {
    let sys = CloudSystem::default_six_providers();
    let table = CipherTable::default_rc6();
    let w = epigenomics_like(24, 700).augment().unwrap();
    let spec = SamplingSpec::default();
    let cfg = SchedulerConfig::default();

    let mut sums = [[0.0f64; 3]; 2];
    for rep in 0..15u64 {
        for (i, eta) in [0.1, 0.7].into_iter().enumerate() {
            // Paired sampling: one seed drives both budget factors.
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7_000, &[rep]));
            let (w2, sys2, cons) = sample_security(&w, &sys, &table, eta, &spec, &mut rng);
            let s = run_pipeline(&w2, &sys2, &table, &cons, &cfg, Algorithm::Lbs).unwrap();
            sums[i][0] += s.makespan;
            sums[i][1] += s.cost;
            sums[i][2] += s.reliability;
        }
    }
    let tight = sums[0];
    let loose = sums[1];
    let pass = loose[0] <= tight[0] && loose[1] <= tight[1] && loose[2] >= tight[2];
    report(
        "7 (eta-trend)",
        pass,
        &format!(
            "makespan {:.1} -> {:.1} s, cost {:.5} -> {:.5} USD, reliability {:.6} -> {:.6}",
            tight[0] / 15.0,
            loose[0] / 15.0,
            tight[1] / 15.0,
            loose[1] / 15.0,
            tight[2] / 15.0,
            loose[2] / 15.0
        ),
    );
}

/// Criterion 8: LBS beats the random baseline on cost in at least 70% of 15
/// paired runs on each bundled workflow.
#[test]
fn criterion_08_baseline_dominance() {
    let sys = CloudSystem::default_six_providers();
    let table = CipherTable::default_rc6();
    let cfg = SchedulerConfig::default();
    let spec = SamplingSpec::default();

    let mut detail = String::new();
    let mut pass = true;
    for w in [epigenomics_like(24, 801), cybershake_like(30, 802)] {
        let w = w.augment().unwrap();
        let mut wins = 0usize;
        for rep in 0..15u64 {
            let seed = derive_seed(8_000, &[rep]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w2, sys2, cons) = sample_security(&w, &sys, &table, 0.4, &spec, &mut rng);
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seed;
            let lbs = run_pipeline(&w2, &sys2, &table, &cons, &run_cfg, Algorithm::Lbs).unwrap();
            let rnd = run_pipeline(&w2, &sys2, &table, &cons, &run_cfg, Algorithm::Random).unwrap();
            if lbs.cost < rnd.cost {
                wins += 1;
            }
        }
        pass &= wins * 100 >= 70 * 15;
        detail.push_str(&format!("{}: {wins}/15 wins; ", w.name()));
    }
    report("8 (baseline-dominance)", pass, detail.trim_end_matches("; "));
}

/// Criterion 9: on the n=100 bundled workflow, list allocation alone stays
/// under 2 s and the full pipeline (LBS + LS, ten iterations, ciphers
/// re-derived per tentative move) under 60 s.
#[test]
fn criterion_09_performance_envelope() {
    let sys = CloudSystem::default_six_providers();
    let table = CipherTable::default_rc6();
    let w = epigenomics_like(100, 900).augment().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9_000);
    let (w2, sys2, cons) = sample_security(&w, &sys, &table, 0.3, &SamplingSpec::default(), &mut rng);

    let pool = sys2.build_resource_pool(&w2);
    let started = Instant::now();
    let mapping = lbs_allocate(&w2, &sys2, &pool, &MetricWeights::lbs_default()).unwrap();
    let lbs_seconds = started.elapsed().as_secs_f64();
    drop(mapping);

    let cfg = SchedulerConfig {
        num_iter: 10,
        frozen_ciphers: false,
        ..SchedulerConfig::default()
    };
    let started = Instant::now();
    let schedule = run_pipeline(&w2, &sys2, &table, &cons, &cfg, Algorithm::LbsLs).unwrap();
    let pipeline_seconds = started.elapsed().as_secs_f64();
    assert!(schedule.makespan > 0.0);

    report(
        "9 (performance-envelope)",
        lbs_seconds < 2.0 && pipeline_seconds < 60.0,
        &format!("LBS {lbs_seconds:.2} s, LBS+LS faithful {pipeline_seconds:.2} s"),
    );
}

/// Criterion 10: two sweeps with identical configuration and seed emit
/// byte-identical raw CSV files.
#[test]
fn criterion_10_deterministic_sweeps() {
    let sys = CloudSystem::default_six_providers();
    let table = CipherTable::default_rc6();
    let make_cfg = || {
        let mut cfg = ExperimentConfig::new(vec![epigenomics_like(12, 100)]);
        cfg.algorithms = vec![Algorithm::Lbs, Algorithm::Random];
        cfg.etas = eta_grid_default();
        cfg.repetitions = 2;
        cfg.base_seed = 1001;
        cfg
    };

    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for run in 0..2 {
        let out = run_sweep(&make_cfg(), &sys, &table).unwrap();
        let path = dir.path().join(format!("raw_{run}.csv"));
        std::fs::write(&path, raw_csv(&out.rows, false)).unwrap();
        paths.push(path);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    report(
        "10 (deterministic-sweeps)",
        a == b,
        &format!("{} bytes, identical across runs", a.len()),
    );
}
