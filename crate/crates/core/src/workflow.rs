//! Workflow model: immutable task DAGs with data-transfer edges.
//!
//! A raw workflow (as parsed or generated) has no virtual tasks. `augment`
//! adds a virtual entry feeding every root and a virtual exit fed by every
//! leaf, both through zero-size edges. All structural queries (topological
//! levels, ranks, maximum parallel set) require the augmented form.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Reserved id of the virtual entry task.
pub const ENTRY_ID: &str = "__entry__";
/// Reserved id of the virtual exit task.
pub const EXIT_ID: &str = "__exit__";

/// Default security weight for edges that do not declare one.
pub const DEFAULT_SEC_WEIGHT: f64 = 1.0;
/// Default per-edge vulnerability cap: admits every cipher of the default
/// table (whose largest vulnerability is 98).
pub const DEFAULT_VULN_CAP: f64 = 98.0;

/// A computational task. `work` is the demand in million instructions.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub work: f64,
    pub is_virtual: bool,
}

/// A data dependency between two tasks.
///
/// `size` is the transfer volume in megabits. `sec_weight` and `vuln_cap`
/// drive the security model: the weight scales the edge's contribution to
/// the system vulnerability and the cap bounds the vulnerability of the
/// cipher that may protect it. Endpoints are stored as task indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DataEdge {
    pub src: usize,
    pub dst: usize,
    pub size: f64,
    pub sec_weight: f64,
    pub vuln_cap: f64,
}

/// Edge description used when building a workflow from ids.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub src: String,
    pub dst: String,
    pub size: f64,
    pub sec_weight: Option<f64>,
    pub vuln_cap: Option<f64>,
}

impl EdgeSpec {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, size: f64) -> Self {
        EdgeSpec {
            src: src.into(),
            dst: dst.into(),
            size,
            sec_weight: None,
            vuln_cap: None,
        }
    }
}

/// An immutable task DAG.
///
/// Edges are kept in canonical order (lexicographic by `(src_id, dst_id)`),
/// which fixes the edge indexing used by the cipher-assignment DP and makes
/// every derived quantity reproducible.
#[derive(Debug, Clone)]
pub struct Workflow {
    name: String,
    tasks: Vec<Task>,
    edges: Vec<DataEdge>,
    /// Incoming edge indices per task.
    preds: Vec<Vec<usize>>,
    /// Outgoing edge indices per task.
    succs: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
    entry: Option<usize>,
    exit: Option<usize>,
}

impl Workflow {
    /// Builds a raw (un-augmented) workflow and validates its structure:
    /// unique task ids, known endpoints, unique `(src, dst)` pairs, no
    /// self-loops, non-negative sizes, weights and caps.
    pub fn new(
        name: impl Into<String>,
        tasks: Vec<(String, f64)>,
        edges: Vec<EdgeSpec>,
    ) -> Result<Workflow> {
        let name = name.into();
        let mut index = HashMap::new();
        let mut task_vec = Vec::with_capacity(tasks.len());
        for (id, work) in tasks {
            if work < 0.0 {
                return Err(Error::Ingestion {
                    location: format!("task `{id}`"),
                    detail: format!("negative work {work}"),
                });
            }
            if index.insert(id.clone(), task_vec.len()).is_some() {
                return Err(Error::Ingestion {
                    location: format!("task `{id}`"),
                    detail: "duplicate task id".into(),
                });
            }
            task_vec.push(Task {
                id,
                work,
                is_virtual: false,
            });
        }

        let mut edge_vec = Vec::with_capacity(edges.len());
        for spec in edges {
            let src = *index.get(&spec.src).ok_or_else(|| Error::Ingestion {
                location: format!("edge ({}, {})", spec.src, spec.dst),
                detail: format!("unknown source task `{}`", spec.src),
            })?;
            let dst = *index.get(&spec.dst).ok_or_else(|| Error::Ingestion {
                location: format!("edge ({}, {})", spec.src, spec.dst),
                detail: format!("unknown destination task `{}`", spec.dst),
            })?;
            if src == dst {
                return Err(Error::Cycle {
                    task: spec.src.clone(),
                });
            }
            if spec.size < 0.0 {
                return Err(Error::Ingestion {
                    location: format!("edge ({}, {})", spec.src, spec.dst),
                    detail: format!("negative size {}", spec.size),
                });
            }
            let sec_weight = spec.sec_weight.unwrap_or(DEFAULT_SEC_WEIGHT);
            let vuln_cap = spec.vuln_cap.unwrap_or(DEFAULT_VULN_CAP);
            if sec_weight < 0.0 || vuln_cap < 0.0 {
                return Err(Error::Ingestion {
                    location: format!("edge ({}, {})", spec.src, spec.dst),
                    detail: "negative security weight or vulnerability cap".into(),
                });
            }
            edge_vec.push(DataEdge {
                src,
                dst,
                size: spec.size,
                sec_weight,
                vuln_cap,
            });
        }

        Workflow::assemble(name, task_vec, edge_vec, None, None)
    }

    fn assemble(
        name: String,
        tasks: Vec<Task>,
        mut edges: Vec<DataEdge>,
        entry: Option<usize>,
        exit: Option<usize>,
    ) -> Result<Workflow> {
        edges.sort_by(|a, b| {
            (tasks[a.src].id.as_str(), tasks[a.dst].id.as_str())
                .cmp(&(tasks[b.src].id.as_str(), tasks[b.dst].id.as_str()))
        });
        for pair in edges.windows(2) {
            if pair[0].src == pair[1].src && pair[0].dst == pair[1].dst {
                return Err(Error::Ingestion {
                    location: format!(
                        "edge ({}, {})",
                        tasks[pair[0].src].id, tasks[pair[0].dst].id
                    ),
                    detail: "duplicate edge".into(),
                });
            }
        }
        let mut preds = vec![Vec::new(); tasks.len()];
        let mut succs = vec![Vec::new(); tasks.len()];
        for (e, edge) in edges.iter().enumerate() {
            succs[edge.src].push(e);
            preds[edge.dst].push(e);
        }
        let index = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        Ok(Workflow {
            name,
            tasks,
            edges,
            preds,
            succs,
            index,
            entry,
            exit,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn edges(&self) -> &[DataEdge] {
        &self.edges
    }

    pub fn task(&self, idx: usize) -> &Task {
        &self.tasks[idx]
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Number of non-virtual tasks.
    pub fn num_real_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| !t.is_virtual).count()
    }

    pub fn incoming(&self, task: usize) -> &[usize] {
        &self.preds[task]
    }

    pub fn outgoing(&self, task: usize) -> &[usize] {
        &self.succs[task]
    }

    pub fn is_augmented(&self) -> bool {
        self.entry.is_some()
    }

    /// Index of the virtual entry task. Panics on raw workflows.
    pub fn entry(&self) -> usize {
        self.entry.expect("workflow not augmented")
    }

    /// Index of the virtual exit task. Panics on raw workflows.
    pub fn exit(&self) -> usize {
        self.exit.expect("workflow not augmented")
    }

    /// True when both endpoints of edge `e` are real tasks.
    pub fn is_real_edge(&self, e: usize) -> bool {
        let edge = &self.edges[e];
        !self.tasks[edge.src].is_virtual && !self.tasks[edge.dst].is_virtual
    }

    pub fn edge_endpoints(&self, e: usize) -> (&str, &str) {
        let edge = &self.edges[e];
        (&self.tasks[edge.src].id, &self.tasks[edge.dst].id)
    }

    /// Adds the virtual entry and exit tasks with zero-size, zero-weight
    /// edges to every root and from every leaf. Idempotent on already
    /// augmented workflows. Fails if the edge relation has a cycle.
    pub fn augment(&self) -> Result<Workflow> {
        if self.is_augmented() {
            return Ok(self.clone());
        }
        if self.index.contains_key(ENTRY_ID) || self.index.contains_key(EXIT_ID) {
            return Err(Error::Ingestion {
                location: "workflow".into(),
                detail: format!("task ids `{ENTRY_ID}` and `{EXIT_ID}` are reserved"),
            });
        }

        let mut tasks = self.tasks.clone();
        let mut edges = self.edges.clone();
        let entry = tasks.len();
        tasks.push(Task {
            id: ENTRY_ID.into(),
            work: 0.0,
            is_virtual: true,
        });
        let exit = tasks.len();
        tasks.push(Task {
            id: EXIT_ID.into(),
            work: 0.0,
            is_virtual: true,
        });
        for t in 0..entry {
            if self.preds[t].is_empty() {
                edges.push(DataEdge {
                    src: entry,
                    dst: t,
                    size: 0.0,
                    sec_weight: 0.0,
                    vuln_cap: DEFAULT_VULN_CAP,
                });
            }
            if self.succs[t].is_empty() {
                edges.push(DataEdge {
                    src: t,
                    dst: exit,
                    size: 0.0,
                    sec_weight: 0.0,
                    vuln_cap: DEFAULT_VULN_CAP,
                });
            }
        }

        let w = Workflow::assemble(self.name.clone(), tasks, edges, Some(entry), Some(exit))?;
        w.check_acyclic()?;
        Ok(w)
    }

    fn check_acyclic(&self) -> Result<()> {
        let order = self.kahn_order();
        if order.len() == self.tasks.len() {
            return Ok(());
        }
        let mut seen = vec![false; self.tasks.len()];
        for t in order {
            seen[t] = true;
        }
        let culprit = (0..self.tasks.len()).find(|&t| !seen[t]).unwrap();
        Err(Error::Cycle {
            task: self.tasks[culprit].id.clone(),
        })
    }

    fn kahn_order(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut queue: std::collections::VecDeque<usize> = (0..self.tasks.len())
            .filter(|&t| indeg[t] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(t) = queue.pop_front() {
            order.push(t);
            for &e in &self.succs[t] {
                let d = self.edges[e].dst;
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    queue.push_back(d);
                }
            }
        }
        order
    }

    /// Tasks in a breadth-first topological order (entry first).
    pub fn topo_order(&self) -> Vec<usize> {
        debug_assert!(self.is_augmented());
        self.kahn_order()
    }

    /// Topological level per task: 0 for the entry, otherwise one more than
    /// the deepest predecessor.
    pub fn top_level(&self) -> Vec<u32> {
        assert!(self.is_augmented(), "top_level requires an augmented workflow");
        let mut level = vec![0u32; self.tasks.len()];
        for t in self.kahn_order() {
            for &e in &self.preds[t] {
                level[t] = level[t].max(level[self.edges[e].src] + 1);
            }
        }
        level
    }

    /// Worst-case downstream processing estimate per task.
    ///
    /// The exit scores its own average execution time; any other task scores
    /// the largest successor rank plus its own average execution time plus
    /// the sum of its outgoing transfer estimates at `avg_bw`.
    pub fn rank(&self, avg_exec: &[f64], avg_bw: f64) -> Vec<f64> {
        assert!(self.is_augmented(), "rank requires an augmented workflow");
        assert_eq!(avg_exec.len(), self.tasks.len());
        assert!(avg_bw > 0.0);
        let mut rank = vec![0.0f64; self.tasks.len()];
        for &t in self.kahn_order().iter().rev() {
            if t == self.exit() {
                rank[t] = avg_exec[t];
                continue;
            }
            let mut best = 0.0f64;
            let mut comm = 0.0f64;
            for &e in &self.succs[t] {
                let edge = &self.edges[e];
                best = best.max(rank[edge.dst]);
                comm += edge.size / avg_bw;
            }
            rank[t] = best + avg_exec[t] + comm;
        }
        rank
    }

    /// Real tasks of the most populous topological level; ties go to the
    /// smaller level index. Empty only for workflows without real tasks.
    pub fn max_parallel_set(&self) -> Vec<usize> {
        assert!(self.is_augmented());
        let levels = self.top_level();
        let mut population: HashMap<u32, usize> = HashMap::new();
        for (t, task) in self.tasks.iter().enumerate() {
            if !task.is_virtual {
                *population.entry(levels[t]).or_insert(0) += 1;
            }
        }
        let Some((&best_level, _)) = population
            .iter()
            .max_by_key(|entry| (*entry.1, std::cmp::Reverse(*entry.0)))
        else {
            return Vec::new();
        };
        (0..self.tasks.len())
            .filter(|&t| !self.tasks[t].is_virtual && levels[t] == best_level)
            .collect()
    }

    /// Clone with per-edge security fields replaced; `f` receives the edge
    /// index and edge and returns `(sec_weight, vuln_cap)`.
    pub fn with_edge_security(&self, mut f: impl FnMut(usize, &DataEdge) -> (f64, f64)) -> Workflow {
        let mut w = self.clone();
        for (e, edge) in w.edges.iter_mut().enumerate() {
            let (weight, cap) = f(e, edge);
            edge.sec_weight = weight;
            edge.vuln_cap = cap;
        }
        w
    }
}
