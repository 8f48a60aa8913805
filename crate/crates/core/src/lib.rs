//! Deterministic multi-cloud workflow scheduling simulator.
//!
//! The crate models scientific workflows (DAGs of tasks with data-transfer
//! edges) executing on a federation of cloud providers with heterogeneous
//! VM types, billing schemes, network tariffs and Poisson failure rates.
//! Data moving between VM instances is protected by block ciphers of
//! configurable strength; a dynamic program picks the cheapest ciphers that
//! respect a weighted system-vulnerability budget and per-edge caps.
//!
//! Modules:
//! - [`workflow`]: DAG model, augmentation, levels, ranks.
//! - [`parse`]: native JSON and DAX XML ingestion.
//! - [`cloud`]: providers, VM types, pricing, bandwidth, reliability.
//! - [`security`]: cipher table, vulnerability algebra, crypto timing.
//! - [`cipher_assign`]: budgeted cipher assignment (DP plus exhaustive oracle).
//! - [`eval`]: mapping-to-schedule evaluation (timing, cost, reliability).
//! - [`scheduler`]: list-based scheduler, local search, baselines, pipeline.
//! - [`synth`]: bundled synthetic workflow generators.
//! - [`experiment`]: seeded parameter sampling, sweeps, audits, CSV output.

pub mod cipher_assign;
pub mod cloud;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod parse;
pub mod scheduler;
pub mod security;
pub mod synth;
pub mod workflow;

pub use error::{Error, Result};
