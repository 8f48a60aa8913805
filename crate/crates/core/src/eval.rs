//! Schedule evaluation: turns a task-to-resource mapping plus a cipher
//! assignment into a fully timed and costed schedule.
//!
//! Tasks are visited in a fixed topological order. A task starts once all
//! predecessors finished and its instance is free; first use of an instance
//! leases it early enough to hide the boot time behind the data wait. Each
//! task's processing time stacks decryption, execution, encryption and
//! outgoing transfers. Cost sums lease bills and transfer fees; reliability
//! multiplies per-link and per-lease survival probabilities.

use serde::{Deserialize, Serialize};

use crate::cloud::{CloudSystem, VmInstance};
use crate::error::{Error, Result};
use crate::security::{CipherAssignment, CipherTable};
use crate::workflow::Workflow;

/// Task-to-resource mapping (task index to pool index). Virtual tasks are
/// never mapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    slots: Vec<Option<usize>>,
}

impl Mapping {
    pub fn new(num_tasks: usize) -> Mapping {
        Mapping {
            slots: vec![None; num_tasks],
        }
    }

    pub fn set(&mut self, task: usize, instance: usize) {
        self.slots[task] = Some(instance);
    }

    pub fn get(&self, task: usize) -> Option<usize> {
        self.slots[task]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Instance of a task that must be mapped.
    pub fn require(&self, w: &Workflow, task: usize) -> Result<usize> {
        self.slots[task].ok_or_else(|| Error::Unmapped {
            task: w.task(task).id.clone(),
        })
    }
}

/// Timing decomposition of one task.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TaskTiming {
    pub start: f64,
    pub finish: f64,
    pub dec: f64,
    pub exec: f64,
    pub enc: f64,
    pub transfer: f64,
}

impl TaskTiming {
    pub fn processing(&self) -> f64 {
        self.dec + self.exec + self.enc + self.transfer
    }
}

/// One leased instance interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lease {
    pub instance: usize,
    pub start: f64,
    pub finish: f64,
}

/// A fully evaluated schedule.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub mapping: Mapping,
    pub assignment: CipherAssignment,
    pub timings: Vec<TaskTiming>,
    pub leases: Vec<Lease>,
    pub makespan: f64,
    pub cost: f64,
    pub reliability: f64,
}

/// Per-task transfer-side components returned by [`process_task`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TaskComponents {
    pub dec_time: f64,
    pub transfer_time: f64,
    pub transfer_cost: f64,
    pub enc_time: f64,
    pub reliability: f64,
}

/// Flags edges whose endpoints sit on distinct instances. Virtual-incident
/// edges are never cross-instance.
pub fn cross_instance_edges(w: &Workflow, mapping: &Mapping) -> Result<Vec<bool>> {
    let mut cross = vec![false; w.edges().len()];
    for (e, edge) in w.edges().iter().enumerate() {
        if !w.is_real_edge(e) {
            continue;
        }
        let src = mapping.require(w, edge.src)?;
        let dst = mapping.require(w, edge.dst)?;
        cross[e] = src != dst;
    }
    Ok(cross)
}

/// Decryption, transfer and encryption components of one task under the
/// given placement. Decryption covers incoming cross-instance edges on the
/// consumer's capacity; encryption, transfer time/cost and link reliability
/// cover outgoing cross-instance edges on the producer's side. Co-located
/// edges contribute nothing and a reliability factor of one.
pub fn process_task(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    pool: &[VmInstance],
    assignment: &CipherAssignment,
    mapping: &Mapping,
    task: usize,
) -> Result<TaskComponents> {
    let mut out = TaskComponents {
        reliability: 1.0,
        ..TaskComponents::default()
    };
    if w.task(task).is_virtual {
        return Ok(out);
    }
    let inst = mapping.require(w, task)?;
    let capacity = sys.vm_type(pool[inst].vm_type).capacity;

    for &e in w.incoming(task) {
        let edge = &w.edges()[e];
        if w.task(edge.src).is_virtual {
            continue;
        }
        let other = mapping.require(w, edge.src)?;
        if other == inst {
            continue;
        }
        let cipher = assignment.choices[e].ok_or_else(|| missing_cipher(w, e))?;
        out.dec_time += table.crypto_time(edge.size, table.cipher(cipher), capacity, false);
    }

    for &e in w.outgoing(task) {
        let edge = &w.edges()[e];
        if w.task(edge.dst).is_virtual {
            continue;
        }
        let other = mapping.require(w, edge.dst)?;
        if other == inst {
            continue;
        }
        let cipher = assignment.choices[e].ok_or_else(|| missing_cipher(w, e))?;
        out.enc_time += table.crypto_time(edge.size, table.cipher(cipher), capacity, false);
        let comm = sys.comm_time(edge.size, inst, other, pool);
        out.transfer_time += comm;
        out.transfer_cost += sys.transfer_cost(edge.size, inst, other, pool);
        out.reliability *= sys.link_reliability(inst, other, pool, comm);
    }
    Ok(out)
}

fn missing_cipher(w: &Workflow, e: usize) -> Error {
    let (src, dst) = w.edge_endpoints(e);
    Error::MissingCipher {
        src: src.to_string(),
        dst: dst.to_string(),
    }
}

/// The task visit order used by [`evaluate`]: topological level ascending,
/// rank descending, task id as the final tie-break.
pub fn eval_order(w: &Workflow, sys: &CloudSystem) -> Vec<usize> {
    let levels = w.top_level();
    let ranks = w.rank(&sys.avg_exec_times(w), sys.avg_bandwidth());
    let mut order: Vec<usize> = (0..w.num_tasks()).collect();
    order.sort_by(|&a, &b| {
        levels[a]
            .cmp(&levels[b])
            .then(ranks[b].total_cmp(&ranks[a]))
            .then_with(|| w.task(a).id.cmp(&w.task(b).id))
    });
    order
}

/// Evaluates a complete mapping into a schedule.
pub fn evaluate(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    pool: &[VmInstance],
    assignment: &CipherAssignment,
    mapping: &Mapping,
) -> Result<Schedule> {
    evaluate_ordered(w, sys, table, pool, assignment, mapping, &eval_order(w, sys))
}

/// [`evaluate`] with a precomputed visit order (must be topological).
pub fn evaluate_ordered(
    w: &Workflow,
    sys: &CloudSystem,
    table: &CipherTable,
    pool: &[VmInstance],
    assignment: &CipherAssignment,
    mapping: &Mapping,
    order: &[usize],
) -> Result<Schedule> {
    assert!(w.is_augmented(), "evaluate requires an augmented workflow");
    let mut timings = vec![TaskTiming::default(); w.num_tasks()];
    let mut lease: Vec<Option<(f64, f64)>> = vec![None; pool.len()];
    let mut transfer_cost_total = 0.0;
    let mut reliability = 1.0f64;

    for &v in order {
        let task = w.task(v);
        let mut ready = 0.0f64;
        for &e in w.incoming(v) {
            ready = ready.max(timings[w.edges()[e].src].finish);
        }
        if task.is_virtual {
            timings[v] = TaskTiming {
                start: ready,
                finish: ready,
                ..TaskTiming::default()
            };
            continue;
        }

        let inst = mapping.require(w, v)?;
        if inst >= pool.len() {
            return Err(Error::PoolIndex {
                index: inst,
                len: pool.len(),
            });
        }
        let vm = sys.vm_type(pool[inst].vm_type);
        let comps = process_task(w, sys, table, pool, assignment, mapping, v)?;
        let exec = vm.exec_time(task.work);
        let pt = comps.dec_time + exec + comps.transfer_time + comps.enc_time;

        let start = match lease[inst] {
            Some((_, finish)) => ready.max(finish),
            None => {
                let s = ready.max(vm.boot_time);
                lease[inst] = Some((s - vm.boot_time, s - vm.boot_time));
                s
            }
        };
        let finish = start + pt;
        lease[inst].as_mut().unwrap().1 = finish;
        timings[v] = TaskTiming {
            start,
            finish,
            dec: comps.dec_time,
            exec,
            enc: comps.enc_time,
            transfer: comps.transfer_time,
        };
        transfer_cost_total += comps.transfer_cost;
        reliability *= comps.reliability;
    }

    let makespan = timings[w.exit()].finish;
    let mut cost = transfer_cost_total;
    let mut leases = Vec::new();
    for (i, state) in lease.iter().enumerate() {
        if let Some((start, finish)) = state {
            let duration = finish - start;
            cost += sys.lease_cost(pool[i].vm_type, duration)?;
            reliability *= sys.vm_reliability(pool[i].vm_type, duration)?;
            leases.push(Lease {
                instance: i,
                start: *start,
                finish: *finish,
            });
        }
    }

    Ok(Schedule {
        mapping: mapping.clone(),
        assignment: assignment.clone(),
        timings,
        leases,
        makespan,
        cost,
        reliability,
    })
}

// ---------------------------------------------------------------------------
// Schedule export
// ---------------------------------------------------------------------------

/// Run metadata embedded in exported schedules so an audit can rebuild the
/// exact sampling context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub algorithm: String,
    pub eta: f64,
    pub seed: u64,
    pub uv_req: f64,
    pub scale_digits: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeaseRecord {
    pub instance: usize,
    pub vm_type: String,
    pub provider: String,
    pub start_s: f64,
    pub finish_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub instance: usize,
    pub start_s: f64,
    pub finish_s: f64,
    pub dec_s: f64,
    pub exec_s: f64,
    pub enc_s: f64,
    pub transfer_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CipherRecord {
    pub src: String,
    pub dst: String,
    pub level: u32,
}

/// Exported schedule: stable field and row order (leases by instance, tasks
/// in workflow order, ciphers in canonical edge order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub workflow: String,
    pub n: usize,
    #[serde(flatten)]
    pub meta: RunMeta,
    pub makespan_s: f64,
    pub cost_usd: f64,
    pub reliability: f64,
    pub leases: Vec<LeaseRecord>,
    pub tasks: Vec<TaskRecord>,
    pub ciphers: Vec<CipherRecord>,
}

impl ScheduleRecord {
    pub fn from_schedule(
        w: &Workflow,
        sys: &CloudSystem,
        table: &CipherTable,
        pool: &[VmInstance],
        schedule: &Schedule,
        meta: RunMeta,
    ) -> ScheduleRecord {
        let leases = schedule
            .leases
            .iter()
            .map(|l| {
                let vm = sys.vm_type(pool[l.instance].vm_type);
                LeaseRecord {
                    instance: l.instance,
                    vm_type: vm.name.clone(),
                    provider: sys.providers()[vm.provider].id.clone(),
                    start_s: l.start,
                    finish_s: l.finish,
                }
            })
            .collect();
        let tasks = w
            .tasks()
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_virtual)
            .map(|(i, t)| {
                let timing = &schedule.timings[i];
                TaskRecord {
                    id: t.id.clone(),
                    instance: schedule.mapping.get(i).expect("real task mapped"),
                    start_s: timing.start,
                    finish_s: timing.finish,
                    dec_s: timing.dec,
                    exec_s: timing.exec,
                    enc_s: timing.enc,
                    transfer_s: timing.transfer,
                }
            })
            .collect();
        let ciphers = schedule
            .assignment
            .choices
            .iter()
            .enumerate()
            .filter_map(|(e, choice)| {
                choice.map(|c| {
                    let (src, dst) = w.edge_endpoints(e);
                    CipherRecord {
                        src: src.to_string(),
                        dst: dst.to_string(),
                        level: table.cipher(c).level,
                    }
                })
            })
            .collect();
        ScheduleRecord {
            workflow: w.name().to_string(),
            n: w.num_real_tasks(),
            meta,
            makespan_s: schedule.makespan,
            cost_usd: schedule.cost,
            reliability: schedule.reliability,
            leases,
            tasks,
            ciphers,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<ScheduleRecord> {
        Ok(serde_json::from_str(s)?)
    }
}
