//! Batch experiment runner.
//!
//! All applications arrive at t = 0 and are served first come, first
//! served. An application's levels run one after another: a level is placed
//! against the live resource matrix when it starts, holds its reservations
//! for the longest makespan among its tasks, and releases them when it ends.
//! The next level is placed at that instant.

mod fluctuation;
mod metrics;
mod timing;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use fluctuation::{apply_fluctuation, FluctuationConfig, FluctuationOutcome};
pub use metrics::{
    MetricRow, MetricsReport, PriorityLatency, PriorityShare, ReplicationReport, TierUtil, Timings, ViolationCounts,
};
pub use timing::{time_algorithms, TimingPoint};

use crate::config::{EnvConfig, WorkloadConfig};
use crate::error::{ConfigError, SimError};
use crate::objective::{check_constraints, eval_mfc, ConstraintViolation, ObjectiveParams};
use crate::ordering::{baseline_order, order_tasks, BaselineOrder, OrderParams, ProcessQueue, QueuedTask};
use crate::placement::{AppState, EdgeMapping, LevelReservation, PlacementPolicy, PlacementViolation, ResourceMatrix};
use crate::rng::{replication_seed, stream_rng, Stream};
use crate::topology::{build_graph, LinkId, NodeId, ResourceGraph};
use crate::workload::{generate_workload, Application};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Weighted ordering with multi-hop placement.
    #[default]
    Herafc,
    /// Levels sorted by raw priority, multi-hop placement.
    OrderPriority,
    /// Levels shuffled, multi-hop placement.
    OrderRandom,
    /// Weighted ordering, each task on its home FN or else the cloud.
    CloudFirst,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Herafc,
        Algorithm::OrderPriority,
        Algorithm::OrderRandom,
        Algorithm::CloudFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Herafc => "herafc",
            Algorithm::OrderPriority => "order-priority",
            Algorithm::OrderRandom => "order-random",
            Algorithm::CloudFirst => "cloud-first",
        }
    }

    pub fn policy(self) -> PlacementPolicy {
        match self {
            Algorithm::CloudFirst => PlacementPolicy::CloudFirst,
            _ => PlacementPolicy::Herafc,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected herafc, order-priority, order-random or cloud-first)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub workload: WorkloadConfig,
    pub algorithm: Algorithm,
    pub order: OrderParams,
    pub objective: ObjectiveParams,
    /// Fog-to-cloud latency penalty for the single-fog model. Recorded for
    /// completeness; the multi-fog runner does not read it.
    pub kappa_ms: Option<f64>,
    pub fluctuation: Option<FluctuationConfig>,
    pub seed: u64,
    pub replications: u32,
    /// Score every application with the objective and report the mean.
    pub emit_objective: bool,
    /// Check resource conservation at every event instant.
    pub audit: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvConfig::default(),
            workload: WorkloadConfig::default(),
            algorithm: Algorithm::Herafc,
            order: OrderParams::default(),
            objective: ObjectiveParams::default(),
            kappa_ms: None,
            fluctuation: None,
            seed: 42,
            replications: 1,
            emit_objective: false,
            audit: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.env.validate()?;
        self.workload.validate()?;
        self.order.validate()?;
        self.objective.validate().map_err(|e| {
            SimError::Config(ConfigError::InvalidValue {
                key: "objective",
                detail: e.to_string(),
            })
        })?;
        if let Some(f) = &self.fluctuation {
            f.validate()?;
        }
        if let Some(k) = self.kappa_ms {
            if !(k.is_finite() && k > 0.0) {
                return Err(ConfigError::InvalidValue {
                    key: "kappa_ms",
                    detail: format!("{k} is not a positive latency"),
                }
                .into());
            }
        }
        if self.replications == 0 {
            return Err(ConfigError::InvalidValue {
                key: "replications",
                detail: "at least one replication is required".into(),
            }
            .into());
        }
        Ok(())
    }
}

/// Run every replication and average them. Replications run on separate
/// threads; each is deterministic in its own seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport, SimError> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.replications).map(|i| replication_seed(cfg.seed, i)).collect();
    let reps: Vec<Result<ReplicationReport, SimError>> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| s.spawn(move || run_replication(cfg, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replication thread panicked"))
            .collect()
    });
    let reps = reps.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::aggregate(cfg.algorithm, cfg.workload.app_count, reps))
}

pub fn run_replication(cfg: &ExperimentConfig, seed: u64) -> Result<ReplicationReport, SimError> {
    let graph = build_graph(&cfg.env, seed)?;
    let apps = generate_workload(&cfg.workload, &graph, seed)?;
    simulate(cfg, &graph, &apps, seed)
}

/// Process queue for `app` under `algorithm`.
pub fn queue_for(
    app: &Application,
    graph: &ResourceGraph,
    algorithm: Algorithm,
    params: &OrderParams,
    rng: &mut impl rand::Rng,
) -> Result<ProcessQueue, SimError> {
    Ok(match algorithm {
        Algorithm::Herafc | Algorithm::CloudFirst => order_tasks(app, graph, params)?,
        Algorithm::OrderPriority => baseline_order(app, BaselineOrder::Priority, rng)?,
        Algorithm::OrderRandom => baseline_order(app, BaselineOrder::Random, rng)?,
    })
}

struct Live<'a> {
    state: AppState<'a>,
    levels: Vec<Vec<QueuedTask>>,
    next: usize,
    held: LevelReservation,
    /// Matrix seen when the first level was placed, for objective scoring.
    admitted: Option<ResourceMatrix>,
}

/// Reserved totals per tier, kept in step with every debit and credit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Held {
    fog_cpu: u64,
    fog_mem: u64,
    cloud_cpu: u64,
    cloud_mem: u64,
    fog_bw: u64,
    cloud_bw: u64,
}

impl Held {
    fn apply(&mut self, res: &LevelReservation, graph: &ResourceGraph, add: bool) {
        let op = |x: &mut u64, v: u64| if add { *x += v } else { *x -= v };
        for &(n, c, m) in &res.compute {
            if n.is_cloud() {
                op(&mut self.cloud_cpu, c);
                op(&mut self.cloud_mem, m);
            } else {
                op(&mut self.fog_cpu, c);
                op(&mut self.fog_mem, m);
            }
        }
        for &(l, b) in &res.bandwidth {
            if graph.link(l).class().is_fog_side() {
                op(&mut self.fog_bw, b);
            } else {
                op(&mut self.cloud_bw, b);
            }
        }
    }

    fn as_array(&self) -> [u64; 6] {
        [self.fog_cpu, self.fog_mem, self.cloud_cpu, self.cloud_mem, self.fog_bw, self.cloud_bw]
    }
}

#[derive(Default)]
struct Tally {
    fog: u64,
    cloud: u64,
    fog_latency: (f64, u64),
    cloud_latency: (f64, u64),
}

/// Run one replication on a prepared graph and workload.
pub fn simulate(
    cfg: &ExperimentConfig,
    graph: &ResourceGraph,
    apps: &[Application],
    seed: u64,
) -> Result<ReplicationReport, SimError> {
    let policy = cfg.algorithm.policy();
    let mut order_rng = stream_rng(seed, Stream::Ordering);
    let mut fluct_rng = stream_rng(seed, Stream::Fluctuation);

    let started = Instant::now();
    let mut queues = Vec::with_capacity(apps.len());
    for app in apps {
        queues.push(queue_for(app, graph, cfg.algorithm, &cfg.order, &mut order_rng)?);
    }
    let order_total_s = if apps.is_empty() { 0.0 } else { started.elapsed().as_secs_f64() };
    let mut place_total_s = 0.0;

    let nominal = ResourceMatrix::new(graph);
    let mut rm = nominal.clone();
    let mut live: Vec<Option<Live>> = apps
        .iter()
        .zip(&queues)
        .map(|(app, q)| {
            Some(Live {
                state: AppState::new(app),
                levels: q.consumption(),
                next: 0,
                held: LevelReservation::default(),
                admitted: None,
            })
        })
        .collect();

    let mut violations = ViolationCounts::default();
    let mut held = Held::default();
    let mut area = [0u128; 6];
    let mut events: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut ready: Vec<usize> = (0..apps.len()).collect();
    let mut next_boundary = 0u64;
    let mut t = 0u64;
    let mut tallies: BTreeMap<u8, Tally> = BTreeMap::new();
    let mut objective_sum = (0.0, 0u64);

    loop {
        if let Some(f) = &cfg.fluctuation {
            while next_boundary <= t {
                let out = apply_fluctuation(&mut rm, graph, f, &mut fluct_rng);
                violations.fluctuation_clamps += out.clamped;
                violations.revocations += out.revocations;
                next_boundary += f.interval_ms();
            }
        }

        ready.sort_unstable();
        for &a in &ready {
            let l = live[a].as_mut().expect("ready application is live");
            if cfg.emit_objective && l.admitted.is_none() {
                l.admitted = Some(rm.clone());
            }
            let level = &l.levels[l.next];
            let tick = Instant::now();
            let res = l.state.place_level(level, graph, &mut rm, policy, None)?;
            place_total_s += tick.elapsed().as_secs_f64();
            let duration = level
                .iter()
                .map(|q| apps[a].tasks[q.task].makespan_ms)
                .max()
                .unwrap_or(0)
                .max(1);
            held.apply(&res, graph, true);
            l.held = res;
            events.push(Reverse((t + duration, a)));
        }
        ready.clear();

        if cfg.audit {
            audit(t, graph, &rm, &live, apps, &held)?;
        }

        let Some(&Reverse((t_next, _))) = events.peek() else {
            break;
        };
        let span = (t_next - t) as u128;
        for (acc, v) in area.iter_mut().zip(held.as_array()) {
            *acc += v as u128 * span;
        }
        t = t_next;

        while let Some(&Reverse((when, a))) = events.peek() {
            if when != t {
                break;
            }
            events.pop();
            let l = live[a].as_mut().expect("scheduled application is live");
            let res = std::mem::take(&mut l.held);
            res.release(&mut rm, graph)?;
            held.apply(&res, graph, false);
            l.next += 1;
            if l.next < l.levels.len() {
                ready.push(a);
            } else {
                let done = live[a].take().expect("application is live");
                finish_app(done, &apps[a], graph, &nominal, cfg, &mut violations, &mut tallies, &mut objective_sum);
            }
        }
    }

    let horizon = t;
    let fog_cpu: u64 = graph.fog_nodes().iter().map(|f| f.cpu).sum();
    let fog_mem: u64 = graph.fog_nodes().iter().map(|f| f.mem_mb).sum();
    let (mut fog_bw, mut cloud_bw) = (0u64, 0u64);
    for l in graph.links() {
        if l.class().is_fog_side() {
            fog_bw += l.bandwidth_mbps;
        } else {
            cloud_bw += l.bandwidth_mbps;
        }
    }
    let caps = [fog_cpu, fog_mem, graph.cloud().cpu, graph.cloud().mem_mb, fog_bw, cloud_bw];
    let pct = |i: usize| {
        if horizon == 0 || caps[i] == 0 {
            0.0
        } else {
            area[i] as f64 / (horizon as f64 * caps[i] as f64) * 100.0
        }
    };

    let mut latency_by_priority = BTreeMap::new();
    let mut fog_share_by_priority = BTreeMap::new();
    for (&p, tl) in &tallies {
        let avg = |(s, n): (f64, u64)| (n > 0).then(|| s / n as f64);
        latency_by_priority.insert(
            p,
            PriorityLatency {
                fog_avg_ms: avg(tl.fog_latency),
                cloud_avg_ms: avg(tl.cloud_latency),
                fog_tasks: tl.fog_latency.1,
                cloud_tasks: tl.cloud_latency.1,
            },
        );
        let total = tl.fog + tl.cloud;
        if total > 0 {
            let fog_pct = tl.fog as f64 / total as f64 * 100.0;
            fog_share_by_priority.insert(
                p,
                PriorityShare {
                    fog_pct,
                    cloud_pct: 100.0 - fog_pct,
                    tasks: total,
                },
            );
        }
    }

    let task_count = apps.iter().map(|a| a.tasks.len() as u64).sum();
    Ok(ReplicationReport {
        seed,
        app_count: apps.len() as u32,
        task_count,
        edge_count: apps.iter().map(|a| a.edges.len() as u64).sum(),
        horizon_ms: horizon,
        fog_util: TierUtil {
            cpu_pct: pct(0),
            mem_pct: pct(1),
            bw_pct: pct(4),
        },
        cloud_util: TierUtil {
            cpu_pct: pct(2),
            mem_pct: pct(3),
            bw_pct: pct(5),
        },
        latency_by_priority,
        fog_share_by_priority,
        violations,
        mean_objective: (objective_sum.1 > 0).then(|| objective_sum.0 / objective_sum.1 as f64),
        timings: Timings {
            order_total_s,
            place_total_s,
            per_app_avg_ms: if apps.is_empty() {
                0.0
            } else {
                (order_total_s + place_total_s) * 1000.0 / apps.len() as f64
            },
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_app(
    done: Live,
    app: &Application,
    graph: &ResourceGraph,
    nominal: &ResourceMatrix,
    cfg: &ExperimentConfig,
    violations: &mut ViolationCounts,
    tallies: &mut BTreeMap<u8, Tally>,
    objective_sum: &mut (f64, u64),
) {
    let admitted = done.admitted;
    let mut placement = done.state.finish();
    // Each task tries its home FN first, so an unused home FN means no task
    // fitted there when it was placed.
    placement.home_fn_unavailable = !placement.uses_home();

    violations.rejected_tasks += placement.rejected.len() as u64;
    for v in &placement.violations {
        match v {
            PlacementViolation::LatencyExceeded { .. } => violations.latency_exceeded += 1,
            PlacementViolation::UnmappedEdge { .. } => violations.unmapped_edges += 1,
        }
    }
    for v in check_constraints(&placement, app, graph, nominal) {
        match v {
            ConstraintViolation::Unassigned { .. } | ConstraintViolation::MultiplyAssigned { .. } => {
                violations.assignment += 1
            }
            ConstraintViolation::Capacity { .. } => violations.capacity += 1,
            ConstraintViolation::Bandwidth { .. } => violations.bandwidth += 1,
            ConstraintViolation::Latency { .. } => {}
            ConstraintViolation::HomeUnused { .. } => violations.home_unused += 1,
            ConstraintViolation::Structural { .. } => violations.structural += 1,
        }
    }

    let locations = placement.locations();
    for t in &app.tasks {
        let Some(&node) = locations.get(&t.id) else {
            continue;
        };
        let tally = tallies.entry(t.priority).or_default();
        if node.is_cloud() {
            tally.cloud += 1;
        } else {
            tally.fog += 1;
        }
        // An edge's latency counts toward its source task.
        let lats: Vec<f64> = app
            .edges
            .iter()
            .filter(|e| e.src == t.id)
            .filter_map(|e| match placement.edge_paths.get(&crate::placement::EdgeKey { src: e.src, dst: e.dst }) {
                Some(EdgeMapping::Mapped(p)) => Some(p.total_latency_ms),
                _ => None,
            })
            .collect();
        if !lats.is_empty() {
            let mean = lats.iter().sum::<f64>() / lats.len() as f64;
            let slot = if node.is_cloud() {
                &mut tally.cloud_latency
            } else {
                &mut tally.fog_latency
            };
            slot.0 += mean;
            slot.1 += 1;
        }
    }

    if let Some(rm) = admitted.filter(|_| cfg.emit_objective) {
        if let Ok(b) = eval_mfc(&placement, app, &rm, &cfg.objective) {
            objective_sum.0 += b.total;
            objective_sum.1 += 1;
        }
    }
}

/// Reservations in the matrix must equal the demand of the tasks and edges
/// currently running, node by node and link by link.
fn audit(
    t: u64,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    live: &[Option<Live>],
    apps: &[Application],
    held: &Held,
) -> Result<(), SimError> {
    let fail = |detail: String| Err(SimError::Invariant { time_ms: t, detail });
    if let Err(e) = rm.check_consistent(graph) {
        return fail(e.to_string());
    }
    let mut cpu: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut mem: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut bw: BTreeMap<LinkId, u64> = BTreeMap::new();
    for (a, l) in live.iter().enumerate() {
        let Some(l) = l else { continue };
        if l.held.is_empty() {
            continue;
        }
        let app = &apps[a];
        for q in &l.levels[l.next] {
            if let Some(n) = l.state.located(q.task) {
                *cpu.entry(n).or_default() += app.tasks[q.task].cpu;
                *mem.entry(n).or_default() += app.tasks[q.task].mem_mb;
            }
        }
        for &(link, mbps) in &l.held.bandwidth {
            *bw.entry(link).or_default() += mbps;
        }
    }
    let mut tier = Held::default();
    for n in graph.hosts() {
        let (c, m) = (cpu.get(&n).copied().unwrap_or(0), mem.get(&n).copied().unwrap_or(0));
        if rm.reserved_cpu(n) != c || rm.reserved_mem(n) != m {
            return fail(format!(
                "{n} reserves {}/{} cpu/mem but hosts {c}/{m}",
                rm.reserved_cpu(n),
                rm.reserved_mem(n)
            ));
        }
        if n.is_cloud() {
            tier.cloud_cpu += c;
            tier.cloud_mem += m;
        } else {
            tier.fog_cpu += c;
            tier.fog_mem += m;
        }
    }
    for (i, link) in graph.links().iter().enumerate() {
        let id = LinkId(i as u32);
        let b = bw.get(&id).copied().unwrap_or(0);
        if rm.reserved_bandwidth(id) != b {
            return fail(format!("link {}-{} reserves {} Mbps, expected {b}", link.a, link.b, rm.reserved_bandwidth(id)));
        }
        if link.class().is_fog_side() {
            tier.fog_bw += b;
        } else {
            tier.cloud_bw += b;
        }
    }
    if tier != *held {
        return fail(format!("tier totals {:?} differ from tracked {:?}", tier.as_array(), held.as_array()));
    }
    Ok(())
}
