//! Workflow ingestion: native JSON and a DAX XML subset.
//!
//! The native format mirrors the in-memory model directly. The DAX subset
//! reads `<job id= runtime=>` elements with nested
//! `<uses file= link="input"|"output" size=>` children; edges derive from
//! producer/consumer file relationships and file sizes in bytes convert to
//! megabits. Job runtimes (seconds on a reference machine) convert to work
//! via a configurable reference MIPS.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workflow::{EdgeSpec, Workflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkflowFormat {
    NativeJson,
    DaxXml,
}

impl WorkflowFormat {
    pub fn parse(s: &str) -> Result<WorkflowFormat> {
        match s.to_ascii_lowercase().as_str() {
            "json" | "native" | "native-json" => Ok(WorkflowFormat::NativeJson),
            "dax" | "xml" | "dax-xml" => Ok(WorkflowFormat::DaxXml),
            other => Err(Error::Ingestion {
                location: "format".into(),
                detail: format!("unknown workflow format `{other}`"),
            }),
        }
    }

    /// Guess from a file extension.
    pub fn from_path(path: &Path) -> Option<WorkflowFormat> {
        match path.extension()?.to_str()? {
            "json" => Some(WorkflowFormat::NativeJson),
            "xml" | "dax" => Some(WorkflowFormat::DaxXml),
            _ => None,
        }
    }
}

/// Ingestion options.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// MIPS of the reference machine DAX runtimes were measured on.
    pub reference_mips: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { reference_mips: 1.0 }
    }
}

/// Reads a workflow file in the given format. The returned workflow is raw
/// (not augmented); its name is the file stem.
pub fn parse_workflow(path: &Path, format: WorkflowFormat, opts: &ParseOptions) -> Result<Workflow> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("workflow")
        .to_string();
    match format {
        WorkflowFormat::NativeJson => parse_native_str(&name, &text),
        WorkflowFormat::DaxXml => parse_dax_str(&name, &text, opts),
    }
}

// ---------------------------------------------------------------------------
// Native JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct NativeTask {
    id: String,
    work_mi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct NativeEdge {
    src: String,
    dst: String,
    /// Megabits.
    size_mb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sec_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vuln_cap: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NativeWorkflow {
    tasks: Vec<NativeTask>,
    edges: Vec<NativeEdge>,
}

pub fn parse_native_str(name: &str, text: &str) -> Result<Workflow> {
    let native: NativeWorkflow = serde_json::from_str(text).map_err(|e| Error::Ingestion {
        location: name.to_string(),
        detail: format!("malformed native workflow: {e}"),
    })?;
    Workflow::new(
        name,
        native.tasks.into_iter().map(|t| (t.id, t.work_mi)).collect(),
        native
            .edges
            .into_iter()
            .map(|e| EdgeSpec {
                src: e.src,
                dst: e.dst,
                size: e.size_mb,
                sec_weight: e.sec_weight,
                vuln_cap: e.vuln_cap,
            })
            .collect(),
    )
}

/// Serializes a workflow to the native JSON format. Virtual tasks and their
/// incident edges are skipped, so augmented workflows export their raw form.
pub fn to_native_json(w: &Workflow) -> String {
    let tasks: Vec<NativeTask> = w
        .tasks()
        .iter()
        .filter(|t| !t.is_virtual)
        .map(|t| NativeTask {
            id: t.id.clone(),
            work_mi: t.work,
        })
        .collect();
    let edges: Vec<NativeEdge> = w
        .edges()
        .iter()
        .enumerate()
        .filter(|&(e, _)| w.is_real_edge(e))
        .map(|(_, e)| NativeEdge {
            src: w.task(e.src).id.clone(),
            dst: w.task(e.dst).id.clone(),
            size_mb: e.size,
            sec_weight: Some(e.sec_weight),
            vuln_cap: Some(e.vuln_cap),
        })
        .collect();
    serde_json::to_string_pretty(&NativeWorkflow { tasks, edges }).expect("serializable")
}

// ---------------------------------------------------------------------------
// DAX XML subset
// ---------------------------------------------------------------------------

const BITS_PER_BYTE: f64 = 8.0;
const BITS_PER_MEGABIT: f64 = 1e6;

pub fn parse_dax_str(name: &str, text: &str, opts: &ParseOptions) -> Result<Workflow> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Ingestion {
        location: name.to_string(),
        detail: format!("malformed XML: {e}"),
    })?;

    struct Job {
        id: String,
        work: f64,
        inputs: Vec<(String, f64)>,
        outputs: Vec<(String, f64)>,
    }

    let mut jobs: Vec<Job> = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("job")) {
        let id = node
            .attribute("id")
            .ok_or_else(|| Error::Ingestion {
                location: format!("{name}: <job>"),
                detail: "missing id attribute".into(),
            })?
            .to_string();
        let runtime: f64 = node
            .attribute("runtime")
            .ok_or_else(|| Error::Ingestion {
                location: format!("{name}: job `{id}`"),
                detail: "missing runtime attribute".into(),
            })?
            .parse()
            .map_err(|_| Error::Ingestion {
                location: format!("{name}: job `{id}`"),
                detail: "runtime is not a number".into(),
            })?;
        let mut job = Job {
            id: id.clone(),
            work: runtime * opts.reference_mips,
            inputs: Vec::new(),
            outputs: Vec::new(),
        };
        for uses in node.children().filter(|n| n.has_tag_name("uses")) {
            let file = uses
                .attribute("file")
                .ok_or_else(|| Error::Ingestion {
                    location: format!("{name}: job `{id}` <uses>"),
                    detail: "missing file attribute".into(),
                })?
                .to_string();
            let size_bytes: f64 = match uses.attribute("size") {
                Some(s) => s.parse().map_err(|_| Error::Ingestion {
                    location: format!("{name}: job `{id}` file `{file}`"),
                    detail: "size is not a number".into(),
                })?,
                None => 0.0,
            };
            let size_megabits = size_bytes * BITS_PER_BYTE / BITS_PER_MEGABIT;
            match uses.attribute("link") {
                Some("input") => job.inputs.push((file, size_megabits)),
                Some("output") => job.outputs.push((file, size_megabits)),
                other => {
                    return Err(Error::Ingestion {
                        location: format!("{name}: job `{id}` file `{file}`"),
                        detail: format!("link must be input or output, got {other:?}"),
                    });
                }
            }
        }
        jobs.push(job);
    }

    // Producer lookup, then producer -> consumer edges with sizes summed per
    // ordered job pair (several files may flow between the same two jobs).
    let mut producers: std::collections::HashMap<&str, Vec<usize>> =
        std::collections::HashMap::new();
    for (j, job) in jobs.iter().enumerate() {
        for (file, _) in &job.outputs {
            producers.entry(file).or_default().push(j);
        }
    }
    let mut pair_sizes: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();
    for (j, job) in jobs.iter().enumerate() {
        for (file, size) in &job.inputs {
            let Some(srcs) = producers.get(file.as_str()) else {
                return Err(Error::Ingestion {
                    location: format!("{name}: job `{}`", job.id),
                    detail: format!("input file `{file}` has no producer"),
                });
            };
            for &src in srcs {
                if src != j {
                    *pair_sizes.entry((src, j)).or_insert(0.0) += size;
                }
            }
        }
    }

    Workflow::new(
        name,
        jobs.iter().map(|j| (j.id.clone(), j.work)).collect(),
        pair_sizes
            .into_iter()
            .map(|((src, dst), size)| EdgeSpec::new(jobs[src].id.clone(), jobs[dst].id.clone(), size))
            .collect(),
    )
}
