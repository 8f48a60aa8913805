//! Multi-cloud system model: providers, VM types, network bandwidth,
//! billing schemes, data-transfer tariffs and Poisson failure rates.
//!
//! Units are fixed across the crate: capacity in MIPS, data in megabits,
//! bandwidth in Mbps, time in seconds, money in USD, failure rates per
//! second. Transfer tariffs are priced per (decimal) gigabyte.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workflow::Workflow;

/// Megabits per (decimal) gigabyte: 8e9 bits / 1e6.
pub const MEGABITS_PER_GB: f64 = 8000.0;
/// Default VM boot time in seconds.
pub const DEFAULT_BOOT_TIME: f64 = 97.0;
/// Default Poisson failure rate per second for links and VMs.
pub const DEFAULT_FAIL_RATE: f64 = 1e-8;

/// How a provider bills leased instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BillingScheme {
    /// Charged per started minute.
    PerMinute,
    /// Charged per started hour.
    PerHour,
    /// Flat charge for the first ten minutes, then per started minute.
    Hybrid,
}

/// One cloud provider (one data center in this model; providers of the same
/// `brand` are sibling centers of one operator).
#[derive(Debug, Clone)]
pub struct Provider {
    pub id: String,
    pub brand: String,
    pub scheme: BillingScheme,
    /// Bandwidth of the internal network, Mbps.
    pub internal_bw: f64,
    /// Failure rate of internal links, per second.
    pub link_fail_rate: f64,
    /// USD/GB for transfers to a sibling center of the same brand.
    pub center_transfer_price: f64,
}

/// A leasable VM type.
#[derive(Debug, Clone)]
pub struct VmType {
    pub name: String,
    /// Index into `CloudSystem::providers`.
    pub provider: usize,
    /// Processing capacity, MIPS.
    pub capacity: f64,
    /// Price per billing period, USD.
    pub price: f64,
    /// Flat price of the first ten minutes (hybrid scheme only).
    pub hybrid_base_price: Option<f64>,
    /// Boot time, seconds.
    pub boot_time: f64,
    /// Failure rate, per second.
    pub fail_rate: f64,
}

impl VmType {
    /// Execution time of `work` MI on this type, seconds.
    pub fn exec_time(&self, work: f64) -> f64 {
        work / self.capacity
    }
}

/// One row of a marginal transfer tariff: volume up to `upto_gb` (GB,
/// `f64::INFINITY` for the unbounded final row) is priced at `usd_per_gb`.
#[derive(Debug, Clone)]
pub struct TierRow {
    pub upto_gb: f64,
    pub usd_per_gb: f64,
}

/// Link parameters between two distinct providers.
#[derive(Debug, Clone)]
pub struct InterCloudTariff {
    /// Bandwidth of the external link, Mbps.
    pub bandwidth: f64,
    /// Failure rate of the external link, per second.
    pub link_fail_rate: f64,
    /// Egress tier table of the sending provider's brand.
    pub tiers: Vec<TierRow>,
}

/// A VM instance of the resource pool. Lease bounds stay unset until an
/// evaluation leases the instance (evaluations work on private pool copies).
#[derive(Debug, Clone)]
pub struct VmInstance {
    /// Index into `CloudSystem::vm_types`.
    pub vm_type: usize,
    pub lease_start: Option<f64>,
    pub lease_finish: Option<f64>,
}

/// The full multi-cloud system.
#[derive(Debug, Clone)]
pub struct CloudSystem {
    providers: Vec<Provider>,
    vm_types: Vec<VmType>,
    /// Ordered provider pairs (sender, receiver), defined for every pair of
    /// distinct providers.
    tariffs: BTreeMap<(usize, usize), InterCloudTariff>,
}

impl CloudSystem {
    pub fn from_config(cfg: &CloudConfig) -> Result<CloudSystem> {
        cfg.build()
    }

    /// The default six-provider system: two sibling centers for each of the
    /// three bundled brands, four VM types per provider with capacities
    /// 4/8/16/32 MIPS, 20 Mbps internal and 100 Mbps external links.
    pub fn default_six_providers() -> CloudSystem {
        CloudConfig::default_six_providers()
            .build()
            .expect("bundled default configuration is valid")
    }

    pub fn providers(&self) -> &[Provider] {
        &self.providers
    }

    pub fn vm_types(&self) -> &[VmType] {
        &self.vm_types
    }

    pub fn vm_type(&self, t: usize) -> &VmType {
        &self.vm_types[t]
    }

    pub fn provider_of_type(&self, t: usize) -> usize {
        self.vm_types[t].provider
    }

    pub fn tariff(&self, sender: usize, receiver: usize) -> &InterCloudTariff {
        &self.tariffs[&(sender, receiver)]
    }

    /// Mean execution time of every task over all VM types.
    pub fn avg_exec_times(&self, w: &Workflow) -> Vec<f64> {
        let inv_cap_mean = self
            .vm_types
            .iter()
            .map(|t| 1.0 / t.capacity)
            .sum::<f64>()
            / self.vm_types.len() as f64;
        w.tasks().iter().map(|t| t.work * inv_cap_mean).collect()
    }

    /// Mean bandwidth over all link classes: one internal class per provider
    /// plus one external class per unordered provider pair.
    pub fn avg_bandwidth(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in &self.providers {
            sum += p.internal_bw;
            count += 1;
        }
        for (&(k, kp), tariff) in &self.tariffs {
            if k < kp {
                sum += tariff.bandwidth;
                count += 1;
            }
        }
        sum / count as f64
    }

    /// Communication time of `size` megabits between two pool placements.
    pub fn comm_time(&self, size: f64, src: usize, dst: usize, pool: &[VmInstance]) -> f64 {
        if src == dst {
            return 0.0;
        }
        let k = self.provider_of_type(pool[src].vm_type);
        let kp = self.provider_of_type(pool[dst].vm_type);
        if k == kp {
            size / self.providers[k].internal_bw
        } else {
            size / self.tariffs[&(k, kp)].bandwidth
        }
    }

    /// Lease cost of `duration` seconds on VM type `t` under the provider's
    /// billing scheme.
    pub fn lease_cost(&self, t: usize, duration: f64) -> Result<f64> {
        if duration < 0.0 {
            return Err(Error::NegativeDuration { value: duration });
        }
        let vm = &self.vm_types[t];
        Ok(match self.providers[vm.provider].scheme {
            BillingScheme::PerMinute => (duration / 60.0).ceil() * vm.price,
            BillingScheme::PerHour => (duration / 3600.0).ceil() * vm.price,
            BillingScheme::Hybrid => {
                let base = vm
                    .hybrid_base_price
                    .expect("hybrid type without base price rejected at build");
                base + ((duration - 600.0) / 60.0).ceil().max(0.0) * vm.price
            }
        })
    }

    /// Cost of transferring `size` megabits between two pool placements.
    /// Same instance or same center is free; sibling centers of one brand
    /// pay the sender's flat cross-center rate; different brands pay the
    /// sender's marginal cross-cloud tiers.
    pub fn transfer_cost(&self, size: f64, src: usize, dst: usize, pool: &[VmInstance]) -> f64 {
        if src == dst {
            return 0.0;
        }
        let k = self.provider_of_type(pool[src].vm_type);
        let kp = self.provider_of_type(pool[dst].vm_type);
        if k == kp {
            return 0.0;
        }
        let gb = size / MEGABITS_PER_GB;
        if self.providers[k].brand == self.providers[kp].brand {
            gb * self.providers[k].center_transfer_price
        } else {
            tiered_cost(&self.tariffs[&(k, kp)].tiers, gb)
        }
    }

    /// Probability that a transfer taking `comm_time` seconds succeeds.
    pub fn link_reliability(
        &self,
        src: usize,
        dst: usize,
        pool: &[VmInstance],
        comm_time: f64,
    ) -> f64 {
        if src == dst {
            return 1.0;
        }
        let k = self.provider_of_type(pool[src].vm_type);
        let kp = self.provider_of_type(pool[dst].vm_type);
        let rate = if k == kp {
            self.providers[k].link_fail_rate
        } else {
            self.tariffs[&(k, kp)].link_fail_rate
        };
        (-rate * comm_time).exp()
    }

    /// Probability that an instance of type `t` runs `duration` seconds
    /// without failing.
    pub fn vm_reliability(&self, t: usize, duration: f64) -> Result<f64> {
        if duration < 0.0 {
            return Err(Error::NegativeDuration { value: duration });
        }
        Ok((-self.vm_types[t].fail_rate * duration).exp())
    }

    /// Builds the reduced resource pool: one instance of every VM type per
    /// member of the workflow's maximum parallel set (at least one), indexed
    /// type-major / copy-minor.
    pub fn build_resource_pool(&self, w: &Workflow) -> Vec<VmInstance> {
        let copies = w.max_parallel_set().len().max(1);
        let mut pool = Vec::with_capacity(copies * self.vm_types.len());
        for t in 0..self.vm_types.len() {
            for _ in 0..copies {
                pool.push(VmInstance {
                    vm_type: t,
                    lease_start: None,
                    lease_finish: None,
                });
            }
        }
        pool
    }

    /// Clone with every failure rate redrawn uniformly from `[lo, hi]`.
    /// Draw order is fixed: provider internal links, then VM types, then
    /// unordered provider pairs (both directions share one draw).
    pub fn resample_failure_rates(&self, lo: f64, hi: f64, rng: &mut impl Rng) -> CloudSystem {
        let mut sys = self.clone();
        for p in &mut sys.providers {
            p.link_fail_rate = rng.random_range(lo..=hi);
        }
        for t in &mut sys.vm_types {
            t.fail_rate = rng.random_range(lo..=hi);
        }
        let m = sys.providers.len();
        for k in 0..m {
            for kp in (k + 1)..m {
                let rate = rng.random_range(lo..=hi);
                if let Some(t) = sys.tariffs.get_mut(&(k, kp)) {
                    t.link_fail_rate = rate;
                }
                if let Some(t) = sys.tariffs.get_mut(&(kp, k)) {
                    t.link_fail_rate = rate;
                }
            }
        }
        sys
    }
}

/// Marginal cost of `gb` gigabytes under a tier table.
fn tiered_cost(tiers: &[TierRow], gb: f64) -> f64 {
    let mut cost = 0.0;
    let mut prev = 0.0;
    for row in tiers {
        let span = gb.min(row.upto_gb) - prev;
        if span > 0.0 {
            cost += span * row.usd_per_gb;
        }
        if gb <= row.upto_gb {
            break;
        }
        prev = row.upto_gb;
    }
    cost
}

// ---------------------------------------------------------------------------
// Configuration file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub id: String,
    pub brand: String,
    pub scheme: BillingScheme,
    pub internal_bw_mbps: f64,
    #[serde(default = "default_fail_rate")]
    pub link_fail_rate: f64,
    pub center_transfer_usd_per_gb: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmTypeConfig {
    pub name: String,
    /// Provider id.
    pub provider: String,
    pub capacity_mips: f64,
    pub price_usd: f64,
    #[serde(default)]
    pub hybrid_base_usd: Option<f64>,
    #[serde(default = "default_boot_time")]
    pub boot_time_s: f64,
    #[serde(default = "default_fail_rate")]
    pub fail_rate: f64,
}

/// One egress tier row; `upto_gb = None` marks the unbounded final row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TierConfig {
    #[serde(default)]
    pub upto_gb: Option<f64>,
    pub usd_per_gb: f64,
}

/// Cloud configuration file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloudConfig {
    pub providers: Vec<ProviderConfig>,
    pub vm_types: Vec<VmTypeConfig>,
    #[serde(default = "default_external_bw")]
    pub external_bw_mbps: f64,
    #[serde(default = "default_fail_rate")]
    pub external_link_fail_rate: f64,
    /// Cross-cloud egress tier tables keyed by brand.
    pub egress_tiers: BTreeMap<String, Vec<TierConfig>>,
    /// Optional cipher catalogue override; the bundled table applies when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cipher_table: Option<crate::security::CipherTable>,
}

fn default_fail_rate() -> f64 {
    DEFAULT_FAIL_RATE
}

fn default_boot_time() -> f64 {
    DEFAULT_BOOT_TIME
}

fn default_external_bw() -> f64 {
    100.0
}

impl CloudConfig {
    pub fn from_json(s: &str) -> Result<CloudConfig> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &std::path::Path) -> Result<CloudConfig> {
        CloudConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<CloudSystem> {
        let mut providers = Vec::new();
        let mut by_id = BTreeMap::new();
        for p in &self.providers {
            if p.internal_bw_mbps <= 0.0 {
                return Err(Error::Config(format!(
                    "provider `{}`: internal bandwidth must be positive",
                    p.id
                )));
            }
            if p.link_fail_rate < 0.0 || p.center_transfer_usd_per_gb < 0.0 {
                return Err(Error::Config(format!(
                    "provider `{}`: negative rate or price",
                    p.id
                )));
            }
            if by_id.insert(p.id.clone(), providers.len()).is_some() {
                return Err(Error::Config(format!("duplicate provider id `{}`", p.id)));
            }
            providers.push(Provider {
                id: p.id.clone(),
                brand: p.brand.clone(),
                scheme: p.scheme,
                internal_bw: p.internal_bw_mbps,
                link_fail_rate: p.link_fail_rate,
                center_transfer_price: p.center_transfer_usd_per_gb,
            });
        }
        if providers.is_empty() {
            return Err(Error::Config("no providers configured".into()));
        }

        let mut vm_types = Vec::new();
        for t in &self.vm_types {
            let provider = *by_id.get(&t.provider).ok_or_else(|| {
                Error::Config(format!(
                    "vm type `{}` references unknown provider `{}`",
                    t.name, t.provider
                ))
            })?;
            if t.capacity_mips <= 0.0 {
                return Err(Error::Config(format!(
                    "vm type `{}`: capacity must be positive",
                    t.name
                )));
            }
            if t.price_usd < 0.0 || t.boot_time_s < 0.0 || t.fail_rate < 0.0 {
                return Err(Error::Config(format!(
                    "vm type `{}`: negative price, boot time or rate",
                    t.name
                )));
            }
            let hybrid = providers[provider].scheme == BillingScheme::Hybrid;
            if hybrid != t.hybrid_base_usd.is_some() {
                return Err(Error::Config(format!(
                    "vm type `{}`: hybrid_base_usd must be set exactly for hybrid providers",
                    t.name
                )));
            }
            vm_types.push(VmType {
                name: t.name.clone(),
                provider,
                capacity: t.capacity_mips,
                price: t.price_usd,
                hybrid_base_price: t.hybrid_base_usd,
                boot_time: t.boot_time_s,
                fail_rate: t.fail_rate,
            });
        }
        if vm_types.is_empty() {
            return Err(Error::Config("no vm types configured".into()));
        }

        let mut brand_tiers: BTreeMap<&str, Vec<TierRow>> = BTreeMap::new();
        for (brand, rows) in &self.egress_tiers {
            let mut tiers = Vec::new();
            let mut prev = 0.0;
            for (i, row) in rows.iter().enumerate() {
                if row.usd_per_gb < 0.0 {
                    return Err(Error::Config(format!("brand `{brand}`: negative tier rate")));
                }
                let upto = match row.upto_gb {
                    Some(gb) if gb <= prev => {
                        return Err(Error::Config(format!(
                            "brand `{brand}`: tier thresholds must be strictly increasing"
                        )));
                    }
                    Some(gb) => gb,
                    None if i + 1 == rows.len() => f64::INFINITY,
                    None => {
                        return Err(Error::Config(format!(
                            "brand `{brand}`: only the final tier may be unbounded"
                        )));
                    }
                };
                prev = upto;
                tiers.push(TierRow {
                    upto_gb: upto,
                    usd_per_gb: row.usd_per_gb,
                });
            }
            if tiers.last().map(|r| r.upto_gb) != Some(f64::INFINITY) {
                return Err(Error::Config(format!(
                    "brand `{brand}`: final tier must be unbounded (omit upto_gb)"
                )));
            }
            brand_tiers.insert(brand.as_str(), tiers);
        }

        if self.external_bw_mbps <= 0.0 {
            return Err(Error::Config("external bandwidth must be positive".into()));
        }

        let mut tariffs = BTreeMap::new();
        for k in 0..providers.len() {
            for kp in 0..providers.len() {
                if k == kp {
                    continue;
                }
                let sender_brand = providers[k].brand.as_str();
                let tiers = if providers[k].brand == providers[kp].brand {
                    // Sibling centers use the flat cross-center price; the
                    // tier table is never consulted, keep it empty.
                    Vec::new()
                } else {
                    brand_tiers
                        .get(sender_brand)
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "no egress tiers configured for brand `{sender_brand}`"
                            ))
                        })?
                        .clone()
                };
                tariffs.insert(
                    (k, kp),
                    InterCloudTariff {
                        bandwidth: self.external_bw_mbps,
                        link_fail_rate: self.external_link_fail_rate,
                        tiers,
                    },
                );
            }
        }

        Ok(CloudSystem {
            providers,
            vm_types,
            tariffs,
        })
    }

    /// The bundled six-provider configuration.
    pub fn default_six_providers() -> CloudConfig {
        let brands = [
            ("ma", "MA", BillingScheme::PerMinute, 0.08),
            ("aws", "AWS", BillingScheme::PerHour, 0.02),
            ("gcp", "GCP", BillingScheme::Hybrid, 0.05),
        ];
        let mut providers = Vec::new();
        for (prefix, brand, scheme, center_price) in &brands {
            for suffix in ["a", "b"] {
                providers.push(ProviderConfig {
                    id: format!("{prefix}-{suffix}"),
                    brand: brand.to_string(),
                    scheme: *scheme,
                    internal_bw_mbps: 20.0,
                    link_fail_rate: DEFAULT_FAIL_RATE,
                    center_transfer_usd_per_gb: *center_price,
                });
            }
        }

        let capacities = [4.0, 8.0, 16.0, 32.0];
        let ma_prices = [("B2MS", 0.0015), ("B4MS", 0.003), ("B8MS", 0.006), ("B16MS", 0.012)];
        let aws_prices = [
            ("m1.small", 0.06),
            ("m1.medium", 0.12),
            ("m1.large", 0.24),
            ("m1.xlarge", 0.45),
        ];
        let gcp_prices = [
            ("n1-highcpu-2", 0.014, 0.0012),
            ("n1-highcpu-4", 0.025, 0.0023),
            ("n1-highcpu-8", 0.05, 0.0047),
            ("n1-highcpu-16", 0.1, 0.0093),
        ];
        let mut vm_types = Vec::new();
        for p in &providers {
            match p.brand.as_str() {
                "MA" => {
                    for (i, (name, price)) in ma_prices.iter().enumerate() {
                        vm_types.push(VmTypeConfig {
                            name: format!("{}/{}", p.id, name),
                            provider: p.id.clone(),
                            capacity_mips: capacities[i],
                            price_usd: *price,
                            hybrid_base_usd: None,
                            boot_time_s: DEFAULT_BOOT_TIME,
                            fail_rate: DEFAULT_FAIL_RATE,
                        });
                    }
                }
                "AWS" => {
                    for (i, (name, price)) in aws_prices.iter().enumerate() {
                        vm_types.push(VmTypeConfig {
                            name: format!("{}/{}", p.id, name),
                            provider: p.id.clone(),
                            capacity_mips: capacities[i],
                            price_usd: *price,
                            hybrid_base_usd: None,
                            boot_time_s: DEFAULT_BOOT_TIME,
                            fail_rate: DEFAULT_FAIL_RATE,
                        });
                    }
                }
                _ => {
                    for (i, (name, base, per_min)) in gcp_prices.iter().enumerate() {
                        vm_types.push(VmTypeConfig {
                            name: format!("{}/{}", p.id, name),
                            provider: p.id.clone(),
                            capacity_mips: capacities[i],
                            price_usd: *per_min,
                            hybrid_base_usd: Some(*base),
                            boot_time_s: DEFAULT_BOOT_TIME,
                            fail_rate: DEFAULT_FAIL_RATE,
                        });
                    }
                }
            }
        }

        let mut egress_tiers = BTreeMap::new();
        egress_tiers.insert(
            "MA".to_string(),
            vec![
                TierConfig { upto_gb: Some(100.0), usd_per_gb: 0.0 },
                TierConfig { upto_gb: Some(10_000.0), usd_per_gb: 0.11 },
                TierConfig { upto_gb: Some(50_000.0), usd_per_gb: 0.075 },
                TierConfig { upto_gb: Some(150_000.0), usd_per_gb: 0.07 },
                TierConfig { upto_gb: None, usd_per_gb: 0.06 },
            ],
        );
        egress_tiers.insert(
            "AWS".to_string(),
            vec![
                TierConfig { upto_gb: Some(100.0), usd_per_gb: 0.0 },
                TierConfig { upto_gb: Some(10_000.0), usd_per_gb: 0.09 },
                TierConfig { upto_gb: Some(50_000.0), usd_per_gb: 0.085 },
                TierConfig { upto_gb: Some(150_000.0), usd_per_gb: 0.07 },
                TierConfig { upto_gb: None, usd_per_gb: 0.05 },
            ],
        );
        egress_tiers.insert(
            "GCP".to_string(),
            vec![
                TierConfig { upto_gb: Some(1_000.0), usd_per_gb: 0.19 },
                TierConfig { upto_gb: Some(10_000.0), usd_per_gb: 0.18 },
                TierConfig { upto_gb: None, usd_per_gb: 0.15 },
            ],
        );

        CloudConfig {
            providers,
            vm_types,
            external_bw_mbps: 100.0,
            external_link_fail_rate: DEFAULT_FAIL_RATE,
            egress_tiers,
            cipher_table: None,
        }
    }
}
