//! Interval-driven availability changes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Span;
use crate::error::ConfigError;
use crate::placement::ResourceMatrix;
use crate::topology::{LinkId, NodeId, ResourceGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationConfig {
    pub interval_s: f64,
    /// Fraction of nominal capacity left available, drawn per node per
    /// interval.
    pub availability_range: Span<f64>,
}

impl Default for FluctuationConfig {
    fn default() -> Self {
        FluctuationConfig {
            interval_s: 20.0,
            availability_range: Span::new(0.3, 0.9),
        }
    }
}

impl FluctuationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return Err(ConfigError::InvalidValue {
                key: "fluctuation.interval_s",
                detail: format!("{} is not a positive number of seconds", self.interval_s),
            });
        }
        let Span { min, max } = self.availability_range;
        if !(min > 0.0 && min <= max && max <= 1.0) {
            return Err(ConfigError::InvalidRange {
                key: "fluctuation.availability_range",
                detail: format!("[{min}, {max}] is not inside (0, 1]"),
            });
        }
        Ok(())
    }

    pub fn interval_ms(&self) -> u64 {
        ((self.interval_s * 1000.0).round() as u64).max(1)
    }
}

/// What one fluctuation step did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FluctuationOutcome {
    /// Nodes and links whose draw fell below the reserved amount and were
    /// held at the reservation instead.
    pub clamped: u64,
    /// Reservations exceeding availability after the step. Always zero
    /// unless the matrix was already corrupt.
    pub revocations: u64,
}

fn draw(rng: &mut impl Rng, range: Span<f64>) -> f64 {
    if range.min == range.max {
        range.min
    } else {
        rng.gen_range(range.min..=range.max)
    }
}

fn scale(nominal: u64, m: f64) -> u64 {
    ((nominal as f64) * m).round() as u64
}

/// Re-scale every host's CPU and memory and every link's bandwidth to a
/// fresh fraction of nominal capacity. Latencies stay at their nominal value.
pub fn apply_fluctuation(
    rm: &mut ResourceMatrix,
    graph: &ResourceGraph,
    cfg: &FluctuationConfig,
    rng: &mut impl Rng,
) -> FluctuationOutcome {
    let mut out = FluctuationOutcome::default();
    let hosts: Vec<NodeId> = graph.hosts().collect();
    for n in hosts {
        let m = draw(rng, cfg.availability_range);
        let cpu = scale(graph.cpu_capacity(n), m);
        let mem = scale(graph.mem_capacity(n), m);
        if rm.set_available(n, cpu, mem) {
            out.clamped += 1;
        }
        if rm.reserved_cpu(n) > rm.available_cpu(n) || rm.reserved_mem(n) > rm.available_mem(n) {
            out.revocations += 1;
        }
    }
    for (i, l) in graph.links().iter().enumerate() {
        let id = LinkId(i as u32);
        let m = draw(rng, cfg.availability_range);
        if rm.set_link_available(id, scale(l.bandwidth_mbps, m)) {
            out.clamped += 1;
        }
        if rm.reserved_bandwidth(id) > rm.available_bandwidth(id) {
            out.revocations += 1;
        }
    }
    out
}
