//! Report types and their flat row form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Algorithm;

/// Time-averaged share of nominal capacity held by reservations, in percent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TierUtil {
    pub cpu_pct: f64,
    pub mem_pct: f64,
    pub bw_pct: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorityLatency {
    /// `None` when no task of this priority with outgoing edges ran there.
    pub fog_avg_ms: Option<f64>,
    pub cloud_avg_ms: Option<f64>,
    pub fog_tasks: u64,
    pub cloud_tasks: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorityShare {
    pub fog_pct: f64,
    pub cloud_pct: f64,
    pub tasks: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub rejected_tasks: u64,
    pub unmapped_edges: u64,
    /// Edge paths slower than the edge's latency bound. Reported, not
    /// enforced.
    pub latency_exceeded: u64,
    pub capacity: u64,
    pub bandwidth: u64,
    pub assignment: u64,
    pub structural: u64,
    pub home_unused: u64,
    pub revocations: u64,
    pub fluctuation_clamps: u64,
}

impl ViolationCounts {
    /// Breaches of the placement rules: every task on exactly one host and
    /// at least one task on the home FN.
    pub fn placement_rules(&self) -> u64 {
        self.assignment + self.structural + self.home_unused
    }

    fn fields(&self) -> [(&'static str, u64); 10] {
        [
            ("rejected_tasks", self.rejected_tasks),
            ("unmapped_edges", self.unmapped_edges),
            ("latency_exceeded", self.latency_exceeded),
            ("capacity", self.capacity),
            ("bandwidth", self.bandwidth),
            ("assignment", self.assignment),
            ("structural", self.structural),
            ("home_unused", self.home_unused),
            ("revocations", self.revocations),
            ("fluctuation_clamps", self.fluctuation_clamps),
        ]
    }
}

/// Wall-clock cost of ordering and placement. Not deterministic, so kept
/// out of the metric rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub order_total_s: f64,
    pub place_total_s: f64,
    pub per_app_avg_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub seed: u64,
    pub app_count: u32,
    pub task_count: u64,
    pub edge_count: u64,
    pub horizon_ms: u64,
    pub fog_util: TierUtil,
    pub cloud_util: TierUtil,
    pub latency_by_priority: BTreeMap<u8, PriorityLatency>,
    pub fog_share_by_priority: BTreeMap<u8, PriorityShare>,
    pub violations: ViolationCounts,
    /// Mean per-application objective, when requested.
    pub mean_objective: Option<f64>,
    #[serde(skip)]
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub algorithm: Algorithm,
    pub app_count: u32,
    pub fog_util: TierUtil,
    pub cloud_util: TierUtil,
    pub latency_by_priority: BTreeMap<u8, PriorityLatency>,
    pub fog_share_by_priority: BTreeMap<u8, PriorityShare>,
    pub violations: ViolationCounts,
    pub mean_objective: Option<f64>,
    pub replications: Vec<ReplicationReport>,
    #[serde(skip)]
    pub timings: Timings,
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub tier: String,
    pub priority: Option<u8>,
    pub app_count: u32,
    pub value: f64,
    pub seed: u64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| mean(v.into_iter()))
}

fn mean_util(us: &[TierUtil]) -> TierUtil {
    TierUtil {
        cpu_pct: mean(us.iter().map(|u| u.cpu_pct)),
        mem_pct: mean(us.iter().map(|u| u.mem_pct)),
        bw_pct: mean(us.iter().map(|u| u.bw_pct)),
    }
}

impl MetricsReport {
    /// Average replications; per-priority entries average over the
    /// replications where they appear.
    pub fn aggregate(algorithm: Algorithm, app_count: u32, replications: Vec<ReplicationReport>) -> Self {
        let fog: Vec<TierUtil> = replications.iter().map(|r| r.fog_util).collect();
        let cloud: Vec<TierUtil> = replications.iter().map(|r| r.cloud_util).collect();
        let priorities: Vec<u8> = {
            let mut p: Vec<u8> = replications
                .iter()
                .flat_map(|r| r.fog_share_by_priority.keys().chain(r.latency_by_priority.keys()).copied())
                .collect();
            p.sort_unstable();
            p.dedup();
            p
        };
        let mut latency = BTreeMap::new();
        let mut share = BTreeMap::new();
        for p in priorities {
            let ls: Vec<PriorityLatency> = replications.iter().filter_map(|r| r.latency_by_priority.get(&p).copied()).collect();
            if !ls.is_empty() {
                latency.insert(
                    p,
                    PriorityLatency {
                        fog_avg_ms: mean_opt(ls.iter().map(|l| l.fog_avg_ms)),
                        cloud_avg_ms: mean_opt(ls.iter().map(|l| l.cloud_avg_ms)),
                        fog_tasks: ls.iter().map(|l| l.fog_tasks).sum(),
                        cloud_tasks: ls.iter().map(|l| l.cloud_tasks).sum(),
                    },
                );
            }
            let ss: Vec<PriorityShare> = replications.iter().filter_map(|r| r.fog_share_by_priority.get(&p).copied()).collect();
            if !ss.is_empty() {
                let fog_pct = mean(ss.iter().map(|s| s.fog_pct));
                share.insert(
                    p,
                    PriorityShare {
                        fog_pct,
                        cloud_pct: 100.0 - fog_pct,
                        tasks: ss.iter().map(|s| s.tasks).sum(),
                    },
                );
            }
        }
        let mut violations = ViolationCounts::default();
        for r in &replications {
            let v = &r.violations;
            violations.rejected_tasks += v.rejected_tasks;
            violations.unmapped_edges += v.unmapped_edges;
            violations.latency_exceeded += v.latency_exceeded;
            violations.capacity += v.capacity;
            violations.bandwidth += v.bandwidth;
            violations.assignment += v.assignment;
            violations.structural += v.structural;
            violations.home_unused += v.home_unused;
            violations.revocations += v.revocations;
            violations.fluctuation_clamps += v.fluctuation_clamps;
        }
        let timings = Timings {
            order_total_s: mean(replications.iter().map(|r| r.timings.order_total_s)),
            place_total_s: mean(replications.iter().map(|r| r.timings.place_total_s)),
            per_app_avg_ms: mean(replications.iter().map(|r| r.timings.per_app_avg_ms)),
        };
        MetricsReport {
            algorithm,
            app_count,
            fog_util: mean_util(&fog),
            cloud_util: mean_util(&cloud),
            latency_by_priority: latency,
            fog_share_by_priority: share,
            violations,
            mean_objective: mean_opt(replications.iter().map(|r| r.mean_objective)),
            replications,
            timings,
        }
    }

    /// Per-replication rows, in a fixed order.
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut out = Vec::new();
        for r in &self.replications {
            let mut push = |metric: &str, tier: &str, priority: Option<u8>, value: f64| {
                out.push(MetricRow {
                    metric: metric.to_string(),
                    tier: tier.to_string(),
                    priority,
                    app_count: r.app_count,
                    value,
                    seed: r.seed,
                });
            };
            push("task_count", "", None, r.task_count as f64);
            push("horizon_ms", "", None, r.horizon_ms as f64);
            for (tier, u) in [("fog", r.fog_util), ("cloud", r.cloud_util)] {
                push("util_cpu_pct", tier, None, u.cpu_pct);
                push("util_mem_pct", tier, None, u.mem_pct);
                push("util_bw_pct", tier, None, u.bw_pct);
            }
            push(&format!("order_ablation_util_pct:{}", self.algorithm.name()), "fog", None, r.fog_util.cpu_pct);
            for (&p, l) in &r.latency_by_priority {
                if let Some(v) = l.fog_avg_ms {
                    push("latency_avg_ms", "fog", Some(p), v);
                }
                if let Some(v) = l.cloud_avg_ms {
                    push("latency_avg_ms", "cloud", Some(p), v);
                }
            }
            for (&p, s) in &r.fog_share_by_priority {
                push("share_pct", "fog", Some(p), s.fog_pct);
                push("share_pct", "cloud", Some(p), s.cloud_pct);
            }
            for (name, v) in r.violations.fields() {
                push(&format!("violations_{name}"), "", None, v as f64);
            }
            if let Some(z) = r.mean_objective {
                push("objective_mean", "", None, z);
            }
        }
        out
    }

    /// Wall-clock rows: `(metric, app_count, value, seed)`.
    pub fn timing_rows(&self) -> Vec<(String, u32, f64, u64)> {
        let mut out = Vec::new();
        for r in &self.replications {
            let t = r.timings;
            out.push(("order_total_s".to_string(), r.app_count, t.order_total_s, r.seed));
            out.push(("place_total_s".to_string(), r.app_count, t.place_total_s, r.seed));
            out.push(("per_app_avg_ms".to_string(), r.app_count, t.per_app_avg_ms, r.seed));
        }
        out
    }
}
