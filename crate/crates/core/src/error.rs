use thiserror::Error;

/// Errors surfaced by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    /// The edge relation is not acyclic; `task` is one member of a cycle.
    #[error("workflow is not acyclic: task `{task}` lies on a cycle")]
    Cycle { task: String },

    /// A workflow description could not be ingested.
    #[error("ingestion error at {location}: {detail}")]
    Ingestion { location: String, detail: String },

    /// A duration that must be non-negative was negative.
    #[error("negative duration: {value} s")]
    NegativeDuration { value: f64 },

    /// A cross-instance edge has no cipher assigned.
    #[error("missing cipher on cross-instance edge ({src} -> {dst})")]
    MissingCipher { src: String, dst: String },

    /// No cipher assignment can satisfy the security constraints.
    #[error("infeasible cipher assignment: {detail}")]
    Infeasible { detail: String },

    /// Instance too large for exhaustive enumeration.
    #[error("{edges} cross-instance edges exceed the exhaustive-search limit of {max}")]
    TooLarge { edges: usize, max: usize },

    /// A real task has no resource assigned.
    #[error("task `{task}` has no resource assigned")]
    Unmapped { task: String },

    /// A mapping references a resource outside the pool.
    #[error("resource index {index} out of range (pool size {len})")]
    PoolIndex { index: usize, len: usize },

    /// No unused instance was left for a task at its topological level.
    #[error("resource pool exhausted at topological level {level}")]
    PoolExhausted { level: u32 },

    /// Invalid model or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
