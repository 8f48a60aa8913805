//! Security model: block-cipher catalogue, vulnerability algebra and
//! encryption/decryption time estimation.
//!
//! Each cipher trades strength for speed: more rounds mean a lower
//! vulnerability score but a higher per-block time. The system vulnerability
//! of a run is the weighted sum of the vulnerabilities chosen for its
//! cross-instance edges; schedulers must keep it under a budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workflow::Workflow;

/// Cipher block size in bits.
pub const BLOCK_SIZE_BITS: f64 = 128.0;

/// One cipher variant. `vulnerability` is the tabulated strength score
/// (0 = strongest); `block_time_us` is the time to encrypt one 128-bit
/// block in microseconds on a unit-capacity machine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cipher {
    pub level: u32,
    pub rounds: u32,
    pub plaintexts_log2: u32,
    #[serde(rename = "vul")]
    pub vulnerability: f64,
    #[serde(rename = "time_us_per_block")]
    pub block_time_us: f64,
}

/// Whether crypto time is divided by the VM capacity or computed against a
/// normalized unit capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CryptoCapacityMode {
    /// Treat every VM as unit capacity (the bundled experiment setting).
    #[default]
    Normalized,
    /// Divide block throughput by the VM's MIPS capacity.
    PerCapacity,
}

/// The cipher catalogue plus block geometry and capacity handling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CipherTable {
    pub ciphers: Vec<Cipher>,
    #[serde(default = "default_block_size")]
    pub block_size_bits: f64,
    #[serde(default)]
    pub capacity_mode: CryptoCapacityMode,
}

fn default_block_size() -> f64 {
    BLOCK_SIZE_BITS
}

impl CipherTable {
    /// The bundled five-level RC6-variant table.
    pub fn default_rc6() -> CipherTable {
        let rows = [
            (1u32, 4u32, 29u32, 98.0, 3.08),
            (2, 8, 61, 67.0, 3.58),
            (3, 12, 94, 34.0, 4.15),
            (4, 16, 118, 10.0, 4.63),
            (5, 20, 128, 0.0, 5.21),
        ];
        CipherTable {
            ciphers: rows
                .iter()
                .map(|&(level, rounds, pt, vul, t)| Cipher {
                    level,
                    rounds,
                    plaintexts_log2: pt,
                    vulnerability: vul,
                    block_time_us: t,
                })
                .collect(),
            block_size_bits: BLOCK_SIZE_BITS,
            capacity_mode: CryptoCapacityMode::Normalized,
        }
    }

    /// Checks table invariants: nonempty, positive block size and times,
    /// non-negative vulnerabilities, and monotone level ordering (higher
    /// level never faster, never more vulnerable).
    pub fn validate(&self) -> Result<()> {
        if self.ciphers.is_empty() {
            return Err(Error::Config("cipher table is empty".into()));
        }
        if self.block_size_bits <= 0.0 {
            return Err(Error::Config("cipher block size must be positive".into()));
        }
        for c in &self.ciphers {
            if c.block_time_us <= 0.0 {
                return Err(Error::Config(format!(
                    "cipher level {}: block time must be positive",
                    c.level
                )));
            }
            if c.vulnerability < 0.0 {
                return Err(Error::Config(format!(
                    "cipher level {}: negative vulnerability",
                    c.level
                )));
            }
        }
        for pair in self.ciphers.windows(2) {
            if pair[1].level > pair[0].level
                && (pair[1].block_time_us <= pair[0].block_time_us
                    || pair[1].vulnerability > pair[0].vulnerability)
            {
                return Err(Error::Config(format!(
                    "cipher levels {} and {} break the strength/time trade-off ordering",
                    pair[0].level, pair[1].level
                )));
            }
        }
        Ok(())
    }

    pub fn cipher(&self, idx: usize) -> &Cipher {
        &self.ciphers[idx]
    }

    pub fn len(&self) -> usize {
        self.ciphers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ciphers.is_empty()
    }

    /// Largest tabulated vulnerability.
    pub fn max_vulnerability(&self) -> f64 {
        self.ciphers
            .iter()
            .map(|c| c.vulnerability)
            .fold(0.0, f64::max)
    }

    /// Time in seconds to encrypt (or decrypt) `size` megabits with `cipher`
    /// on a VM of `capacity` MIPS. Zero when producer and consumer share an
    /// instance.
    pub fn crypto_time(
        &self,
        size_megabits: f64,
        cipher: &Cipher,
        capacity: f64,
        same_instance: bool,
    ) -> f64 {
        if same_instance {
            return 0.0;
        }
        let effective_capacity = match self.capacity_mode {
            CryptoCapacityMode::Normalized => 1.0,
            CryptoCapacityMode::PerCapacity => capacity,
        };
        let blocks = size_megabits * 1e6 / self.block_size_bits;
        blocks * cipher.block_time_us * 1e-6 / effective_capacity
    }
}

/// System-wide security constraints. Per-edge caps and weights live on the
/// workflow edges themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecurityConstraints {
    /// Upper bound on the weighted system vulnerability.
    pub system_cap: f64,
    /// Decimal digits used to integerize edge weights in the DP.
    pub scale_digits: u32,
}

impl SecurityConstraints {
    pub fn new(system_cap: f64) -> SecurityConstraints {
        SecurityConstraints {
            system_cap,
            scale_digits: 1,
        }
    }
}

/// A per-edge cipher choice (indices into a `CipherTable`), aligned with the
/// workflow's canonical edge order. Edges that need no crypto (same-instance
/// or virtual-incident) stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherAssignment {
    pub choices: Vec<Option<usize>>,
    /// Total encryption plus decryption time across assigned edges, seconds.
    pub total_crypto_time: f64,
}

impl CipherAssignment {
    pub fn empty(num_edges: usize) -> CipherAssignment {
        CipherAssignment {
            choices: vec![None; num_edges],
            total_crypto_time: 0.0,
        }
    }
}

/// Weighted system vulnerability of an assignment. `cross[e]` marks edges
/// whose endpoints sit on distinct instances; those must carry a cipher.
/// Same-instance and virtual-incident edges contribute zero.
pub fn system_vulnerability(
    w: &Workflow,
    table: &CipherTable,
    assignment: &CipherAssignment,
    cross: &[bool],
) -> Result<f64> {
    let mut total = 0.0;
    for (e, edge) in w.edges().iter().enumerate() {
        if !w.is_real_edge(e) || !cross[e] {
            continue;
        }
        match assignment.choices[e] {
            Some(c) => total += edge.sec_weight * table.cipher(c).vulnerability,
            None => {
                let (src, dst) = w.edge_endpoints(e);
                return Err(Error::MissingCipher {
                    src: src.to_string(),
                    dst: dst.to_string(),
                });
            }
        }
    }
    Ok(total)
}

/// System vulnerability with every real edge pinned to the most vulnerable
/// cipher of the table; the reference point for budget selection.
pub fn max_vulnerability(w: &Workflow, table: &CipherTable) -> f64 {
    let vmax = table.max_vulnerability();
    w.edges()
        .iter()
        .enumerate()
        .filter(|&(e, _)| !w.is_augmented() || w.is_real_edge(e))
        .map(|(_, edge)| edge.sec_weight * vmax)
        .sum()
}
