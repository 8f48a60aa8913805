//! Bundled synthetic workflow generators.
//!
//! Two desk-scale families stand in for real traces when no DAX file is at
//! hand: a pipelined fan-out/fan-in shape (parallel lanes of sequential
//! stages between a splitter and a merger) and a wide fan-out shape (two
//! roots feeding many short two-task chains collected at the end). Task
//! work and edge sizes are drawn from the given seed; identical inputs
//! always generate identical workflows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::workflow::{EdgeSpec, Workflow};

const WORK_RANGE: std::ops::Range<f64> = 100.0..1000.0;
const SIZE_RANGE: std::ops::Range<f64> = 10.0..500.0;
/// Root fan-out edges of the wide family carry heavier payloads.
const WIDE_ROOT_SIZE_RANGE: std::ops::Range<f64> = 200.0..2000.0;

fn task_id(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).max(1).to_string().len();
    format!("t{i:0width$}")
}

fn chain(name: String, n: usize, rng: &mut ChaCha8Rng) -> Result<Workflow> {
    let tasks: Vec<(String, f64)> = (0..n)
        .map(|i| (task_id(i, n), rng.random_range(WORK_RANGE)))
        .collect();
    let edges = (1..n)
        .map(|i| EdgeSpec::new(task_id(i - 1, n), task_id(i, n), rng.random_range(SIZE_RANGE)))
        .collect();
    Workflow::new(name, tasks, edges)
}

/// Pipelined fan-out/fan-in: one head task splits into parallel lanes of
/// roughly four sequential stages, re-merged and finished by two tail tasks.
pub fn epigenomics_like(n: usize, seed: u64) -> Workflow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = format!("epigenomics-{n}");
    if n < 5 {
        return chain(name, n, &mut rng).expect("generator shapes are valid");
    }
    let tasks: Vec<(String, f64)> = (0..n)
        .map(|i| (task_id(i, n), rng.random_range(WORK_RANGE)))
        .collect();

    let body = n - 4;
    let lanes = body.div_ceil(4);
    let head = 0usize;
    let merge = n - 3;
    let tail1 = n - 2;
    let tail2 = n - 1;
    // Body task b (0-based, id index b + 1) sits in lane b % lanes at
    // position b / lanes.
    let lane_members = |lane: usize| -> Vec<usize> {
        (0..body)
            .filter(|b| b % lanes == lane)
            .map(|b| b + 1)
            .collect::<Vec<_>>()
    };

    let mut edges = Vec::new();
    let size = |rng: &mut ChaCha8Rng| rng.random_range(SIZE_RANGE);
    for lane in 0..lanes {
        let members = lane_members(lane);
        let first = *members.first().expect("every lane has a member");
        edges.push(EdgeSpec::new(task_id(head, n), task_id(first, n), size(&mut rng)));
        for pair in members.windows(2) {
            edges.push(EdgeSpec::new(task_id(pair[0], n), task_id(pair[1], n), size(&mut rng)));
        }
        let last = *members.last().unwrap();
        edges.push(EdgeSpec::new(task_id(last, n), task_id(merge, n), size(&mut rng)));
    }
    edges.push(EdgeSpec::new(task_id(merge, n), task_id(tail1, n), size(&mut rng)));
    edges.push(EdgeSpec::new(task_id(tail1, n), task_id(tail2, n), size(&mut rng)));

    Workflow::new(name, tasks, edges).expect("generator shapes are valid")
}

/// Wide fan-out: two root tasks feed many parallel two-task chains whose
/// results funnel through one collector into a final task.
pub fn cybershake_like(n: usize, seed: u64) -> Workflow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = format!("cybershake-{n}");
    if n < 6 {
        return chain(name, n, &mut rng).expect("generator shapes are valid");
    }
    let tasks: Vec<(String, f64)> = (0..n)
        .map(|i| (task_id(i, n), rng.random_range(WORK_RANGE)))
        .collect();

    let body = n - 4;
    let collector = n - 2;
    let last = n - 1;
    let mut edges = Vec::new();
    let mut pair = 0usize;
    let mut b = 0usize;
    while b < body {
        let synth = 2 + b;
        let root = pair % 2;
        edges.push(EdgeSpec::new(
            task_id(root, n),
            task_id(synth, n),
            rng.random_range(WIDE_ROOT_SIZE_RANGE),
        ));
        if b + 1 < body {
            let post = synth + 1;
            edges.push(EdgeSpec::new(task_id(synth, n), task_id(post, n), rng.random_range(SIZE_RANGE)));
            edges.push(EdgeSpec::new(task_id(post, n), task_id(collector, n), rng.random_range(SIZE_RANGE)));
            b += 2;
        } else {
            // Odd body: the lone chain reports straight to the collector.
            edges.push(EdgeSpec::new(task_id(synth, n), task_id(collector, n), rng.random_range(SIZE_RANGE)));
            b += 1;
        }
        pair += 1;
    }
    edges.push(EdgeSpec::new(task_id(collector, n), task_id(last, n), rng.random_range(SIZE_RANGE)));

    Workflow::new(name, tasks, edges).expect("generator shapes are valid")
}

/// Looks up a bundled family by name.
pub fn bundled(family: &str, n: usize, seed: u64) -> Result<Workflow> {
    match family.to_ascii_lowercase().as_str() {
        "epigenomics" => Ok(epigenomics_like(n, seed)),
        "cybershake" => Ok(cybershake_like(n, seed)),
        other => Err(Error::Config(format!(
            "unknown workflow family `{other}` (expected epigenomics or cybershake)"
        ))),
    }
}
