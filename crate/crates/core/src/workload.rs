//! DAG applications and the synthetic workload generator.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::WorkloadConfig;
use crate::error::WorkloadError;
use crate::rng::{stream_rng, Stream};
use crate::topology::{NodeId, ResourceGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: TaskId,
    pub cpu: u64,
    pub mem_mb: u64,
    pub makespan_ms: u64,
    pub priority: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEdge {
    pub src: TaskId,
    pub dst: TaskId,
    pub bandwidth_mbps: u64,
    pub max_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Application {
    pub id: u32,
    pub home_fn: NodeId,
    pub tasks: Vec<Task>,
    pub edges: Vec<TaskEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DagViolation {
    Empty,
    DuplicateTask(TaskId),
    PriorityOutOfRange(TaskId, u8),
    ZeroCpu(TaskId),
    ZeroMemory(TaskId),
    ZeroMakespan(TaskId),
    UnknownEndpoint(TaskId, TaskId),
    SelfLoop(TaskId),
    DuplicateEdge(TaskId, TaskId),
    Antiparallel(TaskId, TaskId),
    Cycle,
    IsolatedTask(TaskId),
    HomeNotFog(NodeId),
}

impl fmt::Display for DagViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DagViolation::Empty => f.write_str("application has no tasks"),
            DagViolation::DuplicateTask(t) => write!(f, "task id {t} appears twice"),
            DagViolation::PriorityOutOfRange(t, p) => {
                write!(f, "task {t} priority {p} outside 1-5")
            }
            DagViolation::ZeroCpu(t) => write!(f, "task {t} needs cpu >= 1"),
            DagViolation::ZeroMemory(t) => write!(f, "task {t} needs mem_mb > 0"),
            DagViolation::ZeroMakespan(t) => write!(f, "task {t} needs makespan_ms > 0"),
            DagViolation::UnknownEndpoint(s, d) => {
                write!(f, "edge {s}->{d} references an unknown task")
            }
            DagViolation::SelfLoop(t) => write!(f, "edge {t}->{t} violates src ≠ dst"),
            DagViolation::DuplicateEdge(s, d) => write!(f, "edge {s}->{d} listed twice"),
            DagViolation::Antiparallel(s, d) => {
                write!(f, "edges {s}->{d} and {d}->{s} both present")
            }
            DagViolation::Cycle => f.write_str("edge relation contains a cycle"),
            DagViolation::IsolatedTask(t) => write!(f, "task {t} breaks no isolated task"),
            DagViolation::HomeNotFog(n) => write!(f, "home_fn {n} is not a fog node"),
        }
    }
}

impl Application {
    pub fn task_index(&self) -> HashMap<TaskId, usize> {
        self.tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect()
    }

    /// Children of each task, by task position.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let idx = self.task_index();
        let mut out = vec![Vec::new(); self.tasks.len()];
        for e in &self.edges {
            out[idx[&e.src]].push(idx[&e.dst]);
        }
        out
    }

    pub fn parents(&self) -> Vec<Vec<usize>> {
        let idx = self.task_index();
        let mut out = vec![Vec::new(); self.tasks.len()];
        for e in &self.edges {
            out[idx[&e.dst]].push(idx[&e.src]);
        }
        out
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.children().iter().map(Vec::len).collect()
    }

    pub fn total_cpu(&self) -> u64 {
        self.tasks.iter().map(|t| t.cpu).sum()
    }

    pub fn from_json(doc: &str) -> Result<Self, WorkloadError> {
        let app: Application =
            serde_json::from_str(doc).map_err(|e| WorkloadError::Parse(e.to_string()))?;
        let violations = validate_dag(&app);
        if violations.is_empty() {
            Ok(app)
        } else {
            Err(WorkloadError::Invalid(violations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("application serializes")
    }
}

/// Every invariant the application violates; empty when valid.
pub fn validate_dag(app: &Application) -> Vec<DagViolation> {
    let mut out = Vec::new();
    if app.tasks.is_empty() {
        out.push(DagViolation::Empty);
    }
    if !app.home_fn.is_fog() {
        out.push(DagViolation::HomeNotFog(app.home_fn));
    }
    let mut ids = BTreeSet::new();
    for t in &app.tasks {
        if !ids.insert(t.id) {
            out.push(DagViolation::DuplicateTask(t.id));
        }
        if !(1..=5).contains(&t.priority) {
            out.push(DagViolation::PriorityOutOfRange(t.id, t.priority));
        }
        if t.cpu == 0 {
            out.push(DagViolation::ZeroCpu(t.id));
        }
        if t.mem_mb == 0 {
            out.push(DagViolation::ZeroMemory(t.id));
        }
        if t.makespan_ms == 0 {
            out.push(DagViolation::ZeroMakespan(t.id));
        }
    }

    let mut pairs = BTreeSet::new();
    let mut sound = Vec::new();
    for e in &app.edges {
        if !ids.contains(&e.src) || !ids.contains(&e.dst) {
            out.push(DagViolation::UnknownEndpoint(e.src, e.dst));
            continue;
        }
        if e.src == e.dst {
            out.push(DagViolation::SelfLoop(e.src));
            continue;
        }
        if !pairs.insert((e.src, e.dst)) {
            out.push(DagViolation::DuplicateEdge(e.src, e.dst));
            continue;
        }
        if pairs.contains(&(e.dst, e.src)) {
            out.push(DagViolation::Antiparallel(e.dst, e.src));
            continue;
        }
        sound.push((e.src, e.dst));
    }

    // Kahn's algorithm over the well-formed edges.
    let ids: Vec<TaskId> = ids.into_iter().collect();
    let pos: HashMap<TaskId, usize> = ids.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut indeg = vec![0usize; ids.len()];
    let mut adj = vec![Vec::new(); ids.len()];
    let mut degree = vec![0usize; ids.len()];
    for &(s, d) in &sound {
        adj[pos[&s]].push(pos[&d]);
        indeg[pos[&d]] += 1;
        degree[pos[&s]] += 1;
        degree[pos[&d]] += 1;
    }
    let mut stack: Vec<usize> = (0..ids.len()).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(u) = stack.pop() {
        seen += 1;
        for &v in &adj[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    if seen < ids.len() {
        out.push(DagViolation::Cycle);
    }
    // Antiparallel pairs also count as a two-cycle.
    if out.iter().any(|v| matches!(v, DagViolation::Antiparallel(..)))
        && !out.contains(&DagViolation::Cycle)
    {
        out.push(DagViolation::Cycle);
    }
    if ids.len() > 1 {
        for (i, &d) in degree.iter().enumerate() {
            if d == 0 {
                out.push(DagViolation::IsolatedTask(ids[i]));
            }
        }
    }
    out
}

/// Generate `cfg.app_count` random DAG applications homed on FNs of `graph`.
pub fn generate_workload(
    cfg: &WorkloadConfig,
    graph: &ResourceGraph,
    seed: u64,
) -> Result<Vec<Application>, WorkloadError> {
    cfg.validate()?;
    let fns = graph.fog_nodes();
    if fns.is_empty() {
        return Err(WorkloadError::NoFogNodes);
    }
    let apps = cfg.app_count as u64;
    let min_tasks = cfg.tasks_per_app.min as u64;
    if apps * min_tasks > cfg.max_total_tasks {
        return Err(WorkloadError::TaskBudget {
            apps: cfg.app_count,
            needed: apps * min_tasks,
            limit: cfg.max_total_tasks,
        });
    }

    let mut rng = stream_rng(seed, Stream::Workload);
    let mut budget = cfg.max_total_tasks;
    let mut out = Vec::with_capacity(cfg.app_count as usize);
    for a in 0..cfg.app_count {
        let remaining_after = (apps - a as u64 - 1) * min_tasks;
        let sampled = rng.gen_range(cfg.tasks_per_app.min..=cfg.tasks_per_app.max) as u64;
        let n = sampled.min(budget - remaining_after) as usize;
        budget -= n as u64;
        let home_fn = fns[rng.gen_range(0..fns.len())].id;
        out.push(random_app(cfg, a, home_fn, n, &mut rng));
    }
    Ok(out)
}

fn random_app(cfg: &WorkloadConfig, id: u32, home_fn: NodeId, n: usize, rng: &mut impl Rng) -> Application {
    let tasks: Vec<Task> = (0..n)
        .map(|i| Task {
            id: TaskId(i as u32),
            cpu: rng.gen_range(cfg.cpu.min..=cfg.cpu.max),
            mem_mb: rng.gen_range(cfg.mem_mb.min..=cfg.mem_mb.max),
            makespan_ms: rng.gen_range(cfg.makespan_ms.min..=cfg.makespan_ms.max),
            priority: rng.gen_range(cfg.priority.min..=cfg.priority.max),
        })
        .collect();

    // label[k] is the task at topological position k; edges only go forward.
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    let mut pairs = Vec::new();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(cfg.link_probability) {
                pairs.push((i, j));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    if n > 1 {
        for k in 0..n {
            if degree[k] > 0 {
                continue;
            }
            let pair = if k == 0 {
                (0, rng.gen_range(1..n))
            } else {
                (rng.gen_range(0..k), k)
            };
            pairs.push(pair);
            degree[pair.0] += 1;
            degree[pair.1] += 1;
        }
    }
    pairs.sort_unstable();

    let edges = pairs
        .into_iter()
        .map(|(i, j)| TaskEdge {
            src: TaskId(label[i] as u32),
            dst: TaskId(label[j] as u32),
            bandwidth_mbps: rng.gen_range(cfg.edge_bandwidth_mbps.min..=cfg.edge_bandwidth_mbps.max),
            max_latency_ms: if cfg.edge_latency_ms.min == cfg.edge_latency_ms.max {
                cfg.edge_latency_ms.min
            } else {
                rng.gen_range(cfg.edge_latency_ms.min..=cfg.edge_latency_ms.max)
            },
        })
        .collect();
    Application {
        id,
        home_fn,
        tasks,
        edges,
    }
}
