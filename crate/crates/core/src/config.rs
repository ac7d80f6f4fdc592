//! Environment and workload configuration documents.
//!
//! Both documents are plain JSON objects. Every key is optional; missing keys
//! fall back to the reference parameter set (`EnvConfig::default()` /
//! `WorkloadConfig::default()`), unknown keys are rejected.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Closed `[min, max]` range, written in JSON as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span<T> {
    pub min: T,
    pub max: T,
}

impl<T> Span<T> {
    pub const fn new(min: T, max: T) -> Self {
        Span { min, max }
    }
}

impl<T: PartialOrd + fmt::Debug> Span<T> {
    fn check(&self, key: &'static str) -> Result<(), ConfigError> {
        if self.min <= self.max {
            Ok(())
        } else {
            Err(ConfigError::InvalidRange {
                key,
                detail: format!("min {:?} > max {:?}", self.min, self.max),
            })
        }
    }
}

impl<T: Serialize> Serialize for Span<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        tup.serialize_element(&self.min)?;
        tup.serialize_element(&self.max)?;
        tup.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Span<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SpanVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for SpanVisitor<T> {
            type Value = Span<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a [min, max] array")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Span<T>, A::Error> {
                let min = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let max = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Span { min, max })
            }
        }

        deserializer.deserialize_seq(SpanVisitor(std::marker::PhantomData))
    }
}

/// Physical infrastructure parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub fn_count: u32,
    pub fci_count: u32,
    pub fn_cpu: Span<u64>,
    pub fn_mem_mb: Span<u64>,
    pub fn_mips: Span<u32>,
    pub fn_fci_bandwidth_mbps: Span<u64>,
    pub fci_fci_bandwidth_mbps: Span<u64>,
    pub fci_cloud_bandwidth_mbps: Span<u64>,
    pub fn_fci_latency_ms: Span<f64>,
    pub fci_fci_latency_ms: Span<f64>,
    pub fci_cloud_latency_ms: Span<f64>,
    /// Probability that a given FCI pair is directly linked.
    pub fci_link_probability: f64,
    /// Probability that a FN additionally gets a direct link to the cloud.
    pub fn_cloud_link_probability: f64,
    pub fn_cloud_bandwidth_mbps: Span<u64>,
    pub fn_cloud_latency_ms: Span<f64>,
    pub max_hops: u32,
    /// Cloud capacity as a multiple of the summed FN capacity.
    pub cloud_capacity_factor: f64,
    /// Explicit cloud capacities; must still cover the summed FN capacity.
    pub cloud_cpu: Option<u64>,
    pub cloud_mem_mb: Option<u64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            fn_count: 500,
            fci_count: 200,
            fn_cpu: Span::new(50, 100),
            fn_mem_mb: Span::new(200_000, 400_000),
            fn_mips: Span::new(3000, 5000),
            fn_fci_bandwidth_mbps: Span::new(300, 400),
            fci_fci_bandwidth_mbps: Span::new(400, 1000),
            fci_cloud_bandwidth_mbps: Span::new(400, 1000),
            fn_fci_latency_ms: Span::new(50.0, 100.0),
            fci_fci_latency_ms: Span::new(101.0, 200.0),
            fci_cloud_latency_ms: Span::new(101.0, 200.0),
            fci_link_probability: 0.1,
            fn_cloud_link_probability: 0.0,
            fn_cloud_bandwidth_mbps: Span::new(400, 1000),
            fn_cloud_latency_ms: Span::new(101.0, 200.0),
            max_hops: 2,
            cloud_capacity_factor: 10.0,
            cloud_cpu: None,
            cloud_mem_mb: None,
        }
    }
}

impl EnvConfig {
    /// Scale entity counts, keeping per-entity ranges.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.fn_count = scale_count(self.fn_count as u64, factor) as u32;
        out.fci_count = scale_count(self.fci_count as u64, factor) as u32;
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fn_cpu.check("fn_cpu")?;
        self.fn_mem_mb.check("fn_mem_mb")?;
        self.fn_mips.check("fn_mips")?;
        self.fn_fci_bandwidth_mbps.check("fn_fci_bandwidth_mbps")?;
        self.fci_fci_bandwidth_mbps.check("fci_fci_bandwidth_mbps")?;
        self.fci_cloud_bandwidth_mbps.check("fci_cloud_bandwidth_mbps")?;
        self.fn_fci_latency_ms.check("fn_fci_latency_ms")?;
        self.fci_fci_latency_ms.check("fci_fci_latency_ms")?;
        self.fci_cloud_latency_ms.check("fci_cloud_latency_ms")?;
        self.fn_cloud_bandwidth_mbps.check("fn_cloud_bandwidth_mbps")?;
        self.fn_cloud_latency_ms.check("fn_cloud_latency_ms")?;

        positive_u64(self.fn_cpu.min, "fn_cpu")?;
        positive_u64(self.fn_mem_mb.min, "fn_mem_mb")?;
        positive_u64(self.fn_fci_bandwidth_mbps.min, "fn_fci_bandwidth_mbps")?;
        positive_u64(self.fci_fci_bandwidth_mbps.min, "fci_fci_bandwidth_mbps")?;
        positive_u64(self.fci_cloud_bandwidth_mbps.min, "fci_cloud_bandwidth_mbps")?;
        positive_u64(self.fn_cloud_bandwidth_mbps.min, "fn_cloud_bandwidth_mbps")?;
        positive_f64(self.fn_fci_latency_ms.min, "fn_fci_latency_ms")?;

        probability(self.fci_link_probability, "fci_link_probability")?;
        probability(self.fn_cloud_link_probability, "fn_cloud_link_probability")?;

        // FN<->FCI links must be strictly faster than every other link class.
        let fastest_other = self
            .fci_fci_latency_ms
            .min
            .min(self.fci_cloud_latency_ms.min)
            .min(if self.fn_cloud_link_probability > 0.0 {
                self.fn_cloud_latency_ms.min
            } else {
                f64::INFINITY
            });
        if self.fn_fci_latency_ms.max >= fastest_other {
            return Err(ConfigError::Constraint(format!(
                "latency ordering: max FN-FCI latency {} must be below the fastest \
                 FCI-FCI/FCI-cloud latency {}",
                self.fn_fci_latency_ms.max, fastest_other
            )));
        }
        if self.fn_count > 0 && self.fci_count == 0 {
            return Err(ConfigError::Constraint(format!(
                "{} FNs need at least one FCI to attach to",
                self.fn_count
            )));
        }
        if self.fci_count > self.fn_count {
            return Err(ConfigError::Constraint(format!(
                "every FCI needs at least one FN: {} FCIs but only {} FNs",
                self.fci_count, self.fn_count
            )));
        }
        if !(self.cloud_capacity_factor >= 1.0) {
            return Err(ConfigError::InvalidValue {
                key: "cloud_capacity_factor",
                detail: format!("{} is below 1", self.cloud_capacity_factor),
            });
        }
        Ok(())
    }
}

/// Synthetic application parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub app_count: u32,
    pub tasks_per_app: Span<u32>,
    pub cpu: Span<u64>,
    pub mem_mb: Span<u64>,
    pub makespan_ms: Span<u64>,
    pub priority: Span<u8>,
    pub edge_bandwidth_mbps: Span<u64>,
    pub edge_latency_ms: Span<f64>,
    pub link_probability: f64,
    pub max_total_tasks: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            app_count: 10_000,
            tasks_per_app: Span::new(4, 12),
            cpu: Span::new(1, 4),
            mem_mb: Span::new(100, 1000),
            makespan_ms: Span::new(10, 1000),
            priority: Span::new(1, 5),
            edge_bandwidth_mbps: Span::new(100, 200),
            edge_latency_ms: Span::new(10.0, 50.0),
            link_probability: 0.6,
            max_total_tasks: 100_000,
        }
    }
}

impl WorkloadConfig {
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.app_count = scale_count(self.app_count as u64, factor) as u32;
        out.max_total_tasks = scale_count(self.max_total_tasks, factor);
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tasks_per_app.check("tasks_per_app")?;
        self.cpu.check("cpu")?;
        self.mem_mb.check("mem_mb")?;
        self.makespan_ms.check("makespan_ms")?;
        self.priority.check("priority")?;
        self.edge_bandwidth_mbps.check("edge_bandwidth_mbps")?;
        self.edge_latency_ms.check("edge_latency_ms")?;
        if self.tasks_per_app.min == 0 {
            return Err(ConfigError::InvalidValue {
                key: "tasks_per_app",
                detail: "applications need at least one task".into(),
            });
        }
        positive_u64(self.cpu.min, "cpu")?;
        positive_u64(self.mem_mb.min, "mem_mb")?;
        positive_u64(self.makespan_ms.min, "makespan_ms")?;
        if self.priority.min < 1 || self.priority.max > 5 {
            return Err(ConfigError::InvalidRange {
                key: "priority",
                detail: format!(
                    "[{}, {}] leaves the 1-5 scale",
                    self.priority.min, self.priority.max
                ),
            });
        }
        positive_f64(self.edge_latency_ms.min, "edge_latency_ms")?;
        probability(self.link_probability, "link_probability")?;
        Ok(())
    }
}

/// Round a scaled count, never collapsing a nonzero count to zero.
pub fn scale_count(count: u64, factor: f64) -> u64 {
    if count == 0 {
        return 0;
    }
    ((count as f64) * factor).round().max(1.0) as u64
}

fn positive_u64(v: u64, key: &'static str) -> Result<(), ConfigError> {
    if v == 0 {
        Err(ConfigError::InvalidValue {
            key,
            detail: "must be positive".into(),
        })
    } else {
        Ok(())
    }
}

fn positive_f64(v: f64, key: &'static str) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue {
            key,
            detail: format!("{v} must be positive"),
        })
    }
}

fn probability(p: f64, key: &'static str) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue {
            key,
            detail: format!("{p} is not a probability"),
        })
    }
}
