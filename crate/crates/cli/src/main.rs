//! `mcws`: schedule workflows on a simulated multi-cloud, sweep experiment
//! grids, audit exported schedules and generate synthetic workflows.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mcws_core::cloud::{CloudConfig, CloudSystem};
use mcws_core::eval::{RunMeta, ScheduleRecord};
use mcws_core::experiment::{
    aggregate_csv, eta_grid_default, raw_csv, rows_json, run_sweep, sample_security,
    validate_schedule, ExperimentConfig, SamplingSpec,
};
use mcws_core::parse::{parse_workflow, ParseOptions, WorkflowFormat};
use mcws_core::scheduler::{run_pipeline, Algorithm, SchedulerConfig};
use mcws_core::security::CipherTable;
use mcws_core::synth;
use mcws_core::workflow::Workflow;

#[derive(Parser)]
#[command(
    name = "mcws",
    version,
    about = "Multi-cloud workflow scheduling simulator",
    long_about = "Schedules DAG workflows across simulated cloud providers under a \
                  security-overhead budget, reporting makespan, monetary cost and reliability."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule one workflow and print the objectives.
    Run(RunArgs),
    /// Run a full experiment grid and emit CSV results.
    Sweep(SweepArgs),
    /// Audit an exported schedule against its inputs.
    Validate(ValidateArgs),
    /// Generate a synthetic workflow file.
    Gen(GenArgs),
}

#[derive(Args)]
struct WorkflowArgs {
    /// Workflow file, or a bundled spec like `epigenomics-24` /
    /// `cybershake-30@7` (`@N` picks the generator seed, default 0).
    #[arg(long)]
    workflow: String,
    /// Input format (json or dax); guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// MIPS of the reference machine behind DAX runtimes.
    #[arg(long, default_value_t = 1.0)]
    reference_mips: f64,
}

#[derive(Args)]
struct CloudArgs {
    /// Cloud configuration file; the bundled six-provider system when
    /// omitted.
    #[arg(long)]
    cloud: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    workflow: WorkflowArgs,
    #[command(flatten)]
    cloud: CloudArgs,
    /// Mapping algorithm: lbs, lbs+ls, random or greedy.
    #[arg(long, default_value = "lbs")]
    algo: String,
    /// Security budget factor in (0, 1]: budget = eta x max vulnerability.
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Seed driving weights, caps and failure rates.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Export the evaluated schedule to this JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep one placement-independent cipher assignment during local search.
    #[arg(long)]
    frozen_ciphers: bool,
    /// Local-search iteration cap.
    #[arg(long, default_value_t = 10)]
    num_iter: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Workflow files or bundled specs (repeatable).
    #[arg(long, num_args = 1.., default_values_t = [String::from("epigenomics-24"), String::from("cybershake-30")])]
    workflow: Vec<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    reference_mips: f64,
    #[command(flatten)]
    cloud: CloudArgs,
    /// Comma-separated algorithms.
    #[arg(long, default_value = "lbs,random")]
    algo: String,
    /// Comma-separated budget factors; the 0.1..0.7 grid when omitted.
    #[arg(long)]
    eta: Option<String>,
    /// Repetitions per grid cell.
    #[arg(long, default_value_t = 15)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output prefix; writes <out>_raw.csv and <out>_agg.csv.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write a JSON mirror of the raw rows.
    #[arg(long)]
    json: bool,
    /// Include wall-clock milliseconds in the raw CSV (not reproducible).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    frozen_ciphers: bool,
    #[arg(long, default_value_t = 10)]
    num_iter: usize,
}

#[derive(Args)]
struct ValidateArgs {
    /// Exported schedule JSON.
    #[arg(long)]
    schedule: PathBuf,
    #[command(flatten)]
    workflow: WorkflowArgs,
    #[command(flatten)]
    cloud: CloudArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Workflow family: epigenomics or cybershake.
    #[arg(long)]
    family: String,
    /// Number of tasks.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (native workflow JSON).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Validate(args) => validate(args),
        Command::Gen(args) => gen(args),
    }
}

/// Resolves a workflow argument: an existing file wins; otherwise bundled
/// specs of the form `family-N` or `family-N@SEED` generate on the fly.
fn load_workflow(spec: &WorkflowArgs) -> Result<Workflow> {
    let path = Path::new(&spec.workflow);
    if path.exists() {
        let format = match &spec.format {
            Some(f) => WorkflowFormat::parse(f)?,
            None => WorkflowFormat::from_path(path)
                .with_context(|| format!("cannot guess the format of {}", path.display()))?,
        };
        let opts = ParseOptions {
            reference_mips: spec.reference_mips,
        };
        return Ok(parse_workflow(path, format, &opts)?);
    }
    if let Some((family, rest)) = spec.workflow.split_once('-') {
        let (n, seed) = match rest.split_once('@') {
            Some((n, seed)) => (n.parse::<usize>(), seed.parse::<u64>().ok()),
            None => (rest.parse::<usize>(), Some(0)),
        };
        if let (Ok(n), Some(seed)) = (n, seed) {
            return Ok(synth::bundled(family, n, seed)?);
        }
    }
    bail!(
        "`{}` is neither a readable file nor a bundled spec like epigenomics-24",
        spec.workflow
    );
}

fn load_cloud(args: &CloudArgs) -> Result<(CloudSystem, CipherTable)> {
    match &args.cloud {
        Some(path) => {
            let cfg = CloudConfig::load(path)
                .with_context(|| format!("reading cloud config {}", path.display()))?;
            let table = match &cfg.cipher_table {
                Some(t) => {
                    t.validate()?;
                    t.clone()
                }
                None => CipherTable::default_rc6(),
            };
            Ok((cfg.build()?, table))
        }
        None => Ok((CloudSystem::default_six_providers(), CipherTable::default_rc6())),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let algo = Algorithm::parse(&args.algo)?;
    let raw = load_workflow(&args.workflow)?;
    let w = raw.augment()?;
    let (sys, table) = load_cloud(&args.cloud)?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let sampling = SamplingSpec::default();
    let (w2, sys2, cons) = sample_security(&w, &sys, &table, args.eta, &sampling, &mut rng);

    let scheduler = SchedulerConfig {
        num_iter: args.num_iter,
        seed: args.seed,
        frozen_ciphers: args.frozen_ciphers,
        ..SchedulerConfig::default()
    };
    let schedule = run_pipeline(&w2, &sys2, &table, &cons, &scheduler, algo)?;

    let pool = sys2.build_resource_pool(&w2);
    let record = ScheduleRecord::from_schedule(
        &w2,
        &sys2,
        &table,
        &pool,
        &schedule,
        RunMeta {
            algorithm: algo.name().into(),
            eta: args.eta,
            seed: args.seed,
            uv_req: cons.system_cap,
            scale_digits: cons.scale_digits,
        },
    );

    println!("workflow     {} (n = {})", record.workflow, record.n);
    println!("algorithm    {}", record.meta.algorithm);
    println!("eta          {} (budget {:.4})", args.eta, cons.system_cap);
    println!("seed         {}", args.seed);
    println!("makespan     {:.6} s", schedule.makespan);
    println!("cost         {:.6} USD", schedule.cost);
    println!("reliability  {:.9}", schedule.reliability);
    println!("leases       {}", schedule.leases.len());

    let audit = validate_schedule(&w2, &sys2, &table, &cons, &record);
    print!("{}", audit.render());
    if let Some(out) = &args.out {
        std::fs::write(out, record.to_json())
            .with_context(|| format!("writing {}", out.display()))?;
        println!("schedule exported to {}", out.display());
    }
    if !audit.passed() {
        bail!("schedule audit failed");
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut workflows = Vec::new();
    for spec in &args.workflow {
        workflows.push(load_workflow(&WorkflowArgs {
            workflow: spec.clone(),
            format: args.format.clone(),
            reference_mips: args.reference_mips,
        })?);
    }
    let (sys, table) = load_cloud(&args.cloud)?;

    let mut cfg = ExperimentConfig::new(workflows);
    cfg.algorithms = args
        .algo
        .split(',')
        .map(|s| Algorithm::parse(s.trim()))
        .collect::<mcws_core::Result<Vec<_>>>()?;
    cfg.etas = match &args.eta {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<f64>().context("bad eta value"))
            .collect::<Result<Vec<_>>>()?,
        None => eta_grid_default(),
    };
    cfg.repetitions = args.reps;
    cfg.base_seed = args.seed;
    cfg.scheduler.num_iter = args.num_iter;
    cfg.scheduler.frozen_ciphers = args.frozen_ciphers;
    cfg.include_timings = args.timings;

    let output = run_sweep(&cfg, &sys, &table)?;

    let raw_path = args.out.with_file_name(format!(
        "{}_raw.csv",
        args.out.file_name().unwrap_or_default().to_string_lossy()
    ));
    let agg_path = args.out.with_file_name(format!(
        "{}_agg.csv",
        args.out.file_name().unwrap_or_default().to_string_lossy()
    ));
    std::fs::write(&raw_path, raw_csv(&output.rows, cfg.include_timings))?;
    std::fs::write(&agg_path, aggregate_csv(&output.aggregates))?;
    println!(
        "wrote {} raw rows to {} and {} aggregate rows to {}",
        output.rows.len(),
        raw_path.display(),
        output.aggregates.len(),
        agg_path.display()
    );
    if args.json {
        let json_path = args.out.with_file_name(format!(
            "{}_raw.json",
            args.out.file_name().unwrap_or_default().to_string_lossy()
        ));
        std::fs::write(&json_path, rows_json(&output.rows))?;
        println!("wrote JSON mirror to {}", json_path.display());
    }
    let infeasible = output.rows.iter().filter(|r| !r.feasible).count();
    if infeasible > 0 {
        bail!("{infeasible} runs were infeasible or failed their audit");
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.schedule)
        .with_context(|| format!("reading {}", args.schedule.display()))?;
    let record = ScheduleRecord::from_json(&text)?;

    let raw = load_workflow(&args.workflow)?;
    let w = raw.augment()?;
    let (sys, table) = load_cloud(&args.cloud)?;

    // Rebuild the exact sampling context the run used.
    let mut rng = ChaCha8Rng::seed_from_u64(record.meta.seed);
    let sampling = SamplingSpec {
        scale_digits: record.meta.scale_digits,
        ..SamplingSpec::default()
    };
    let (w2, sys2, cons) = sample_security(&w, &sys, &table, record.meta.eta, &sampling, &mut rng);

    let report = validate_schedule(&w2, &sys2, &table, &cons, &record);
    print!("{}", report.render());
    if !report.passed() {
        bail!("schedule audit failed");
    }
    println!("all checks passed");
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let w = synth::bundled(&args.family, args.n, args.seed)?;
    std::fs::write(&args.out, mcws_core::parse::to_native_json(&w))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} ({} tasks, {} edges) to {}",
        w.name(),
        w.num_tasks(),
        w.edges().len(),
        args.out.display()
    );
    Ok(())
}
