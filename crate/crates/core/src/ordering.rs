//! Task order selection: normalized makespan/priority/resource demand,
//! weighted critical values and the level-grouped process queue.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::OrderingError;
use crate::topology::ResourceGraph;
use crate::workload::{Application, TaskId};

const WEIGHT_TOL: f64 = 1e-9;

/// Dimension weights for the critical value (`makespan`, `priority`,
/// `resource`) and the CPU/memory split inside the resource dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub makespan: f64,
    pub priority: f64,
    pub resource: f64,
    pub cpu_share: f64,
    pub mem_share: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            makespan: 1.0 / 3.0,
            priority: 1.0 / 3.0,
            resource: 1.0 / 3.0,
            cpu_share: 0.5,
            mem_share: 0.5,
        }
    }
}

impl Weights {
    pub fn new(makespan: f64, priority: f64, resource: f64) -> Result<Self, OrderingError> {
        let w = Weights {
            makespan,
            priority,
            resource,
            ..Weights::default()
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), OrderingError> {
        let all = [
            self.makespan,
            self.priority,
            self.resource,
            self.cpu_share,
            self.mem_share,
        ];
        if all.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(OrderingError::InvalidWeights(format!(
                "all weights must be strictly positive, got {all:?}"
            )));
        }
        let sum = self.makespan + self.priority + self.resource;
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(OrderingError::InvalidWeights(format!(
                "makespan + priority + resource weights sum to {sum}, not 1"
            )));
        }
        let omega = self.cpu_share + self.mem_share;
        if (omega - 1.0).abs() > WEIGHT_TOL {
            return Err(OrderingError::InvalidWeights(format!(
                "cpu_share + mem_share sum to {omega}, not 1"
            )));
        }
        Ok(())
    }
}

/// Which nodes define the maximum capacity used to normalize resource demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityScope {
    #[default]
    FogOnly,
    IncludeCloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderParams {
    pub weights: Weights,
    pub delta: f64,
    pub capacity_scope: CapacityScope,
}

impl Default for OrderParams {
    fn default() -> Self {
        OrderParams {
            weights: Weights::default(),
            delta: 0.001,
            capacity_scope: CapacityScope::FogOnly,
        }
    }
}

impl OrderParams {
    pub fn validate(&self) -> Result<(), OrderingError> {
        self.weights.validate()?;
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(OrderingError::InvalidDelta(self.delta));
        }
        Ok(())
    }
}

fn normalize_by_max(
    app: &Application,
    what: &'static str,
    value: impl Fn(usize) -> f64,
) -> Result<Vec<f64>, OrderingError> {
    if app.tasks.is_empty() {
        return Err(OrderingError::EmptyApplication);
    }
    for (i, t) in app.tasks.iter().enumerate() {
        if !(value(i) > 0.0) {
            return Err(OrderingError::NonPositive(t.id, what));
        }
    }
    let max = (0..app.tasks.len()).map(&value).fold(0.0, f64::max);
    Ok((0..app.tasks.len()).map(|i| value(i) / max).collect())
}

/// `M_i / max M`, by task position.
pub fn normalize_makespan(app: &Application) -> Result<Vec<f64>, OrderingError> {
    normalize_by_max(app, "makespan", |i| app.tasks[i].makespan_ms as f64)
}

/// `P_i / max P`, by task position.
pub fn normalize_priority(app: &Application) -> Result<Vec<f64>, OrderingError> {
    normalize_by_max(app, "priority", |i| app.tasks[i].priority as f64)
}

/// Largest CPU and memory capacity among the nodes in `scope`.
pub fn max_capacity(graph: &ResourceGraph, scope: CapacityScope) -> (u64, u64) {
    let fog_cpu = graph.fog_nodes().iter().map(|f| f.cpu).max().unwrap_or(0);
    let fog_mem = graph.fog_nodes().iter().map(|f| f.mem_mb).max().unwrap_or(0);
    match scope {
        CapacityScope::FogOnly => (fog_cpu, fog_mem),
        CapacityScope::IncludeCloud => (fog_cpu.max(graph.cloud().cpu), fog_mem.max(graph.cloud().mem_mb)),
    }
}

/// Weighted resource demand `(Ω^c·R̂^cpu + Ω^m·R̂^mem) / 2` against the given
/// maximum capacities. Each share is capped at 1 so a task larger than every
/// FN still maps into (0, 1].
pub fn normalize_resource_with(
    app: &Application,
    max_cpu: u64,
    max_mem_mb: u64,
    weights: &Weights,
) -> Result<Vec<f64>, OrderingError> {
    if app.tasks.is_empty() {
        return Err(OrderingError::EmptyApplication);
    }
    if max_cpu == 0 {
        return Err(OrderingError::ZeroCapacity { resource: "cpu" });
    }
    if max_mem_mb == 0 {
        return Err(OrderingError::ZeroCapacity { resource: "memory" });
    }
    app.tasks
        .iter()
        .map(|t| {
            if t.cpu == 0 {
                return Err(OrderingError::NonPositive(t.id, "cpu"));
            }
            if t.mem_mb == 0 {
                return Err(OrderingError::NonPositive(t.id, "memory"));
            }
            let cpu = (t.cpu as f64 / max_cpu as f64).min(1.0);
            let mem = (t.mem_mb as f64 / max_mem_mb as f64).min(1.0);
            Ok((weights.cpu_share * cpu + weights.mem_share * mem) / 2.0)
        })
        .collect()
}

pub fn normalize_resource(
    app: &Application,
    graph: &ResourceGraph,
    weights: &Weights,
    scope: CapacityScope,
) -> Result<Vec<f64>, OrderingError> {
    let (cpu, mem) = max_capacity(graph, scope);
    normalize_resource_with(app, cpu, mem, weights)
}

/// `WV = (w1·M̂)(w2·P̂)(w3·R̂)`.
pub fn critical_value(m: f64, p: f64, r: f64, weights: &Weights) -> f64 {
    (weights.makespan * m) * (weights.priority * p) * (weights.resource * r)
}

/// `MCV = WV / (OD + δ)`.
pub fn mean_critical_value(wv: f64, out_degree: usize, delta: f64) -> f64 {
    wv / (out_degree as f64 + delta)
}

/// Critical value of every task, by task position.
pub fn critical_values(
    app: &Application,
    graph: &ResourceGraph,
    params: &OrderParams,
) -> Result<Vec<f64>, OrderingError> {
    params.validate()?;
    let m = normalize_makespan(app)?;
    let p = normalize_priority(app)?;
    let r = normalize_resource(app, graph, &params.weights, params.capacity_scope)?;
    Ok((0..app.tasks.len())
        .map(|i| critical_value(m[i], p[i], r[i], &params.weights))
        .collect())
}

/// Level of every task: 0 for leaves, otherwise one above its highest child.
pub fn task_levels(app: &Application) -> Result<Vec<usize>, OrderingError> {
    let n = app.tasks.len();
    if n == 0 {
        return Err(OrderingError::EmptyApplication);
    }
    let children = app.children();
    let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
    let parents = app.parents();
    let mut level = vec![0usize; n];
    let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut done = 0;
    while let Some(u) = ready.pop() {
        done += 1;
        for &p in &parents[u] {
            level[p] = level[p].max(level[u] + 1);
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(p);
            }
        }
    }
    if done < n {
        return Err(OrderingError::Cycle);
    }
    Ok(level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueuedTask {
    /// Position of the task in `Application::tasks`.
    pub task: usize,
    pub id: TaskId,
    /// Sort key within the level (MCV for the weighted order).
    pub key: f64,
}

/// Tasks grouped by level, level 0 (leaves) first, each level ascending by
/// `(key, task id)`.
///
/// Placement consumes the queue last-in-first-out: the root level first and,
/// inside a level, the highest key first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessQueue {
    levels: Vec<Vec<QueuedTask>>,
}

impl ProcessQueue {
    /// Group tasks by `level` and sort each group ascending by `(key, id)`.
    pub fn from_keys(app: &Application, levels: &[usize], keys: &[f64]) -> Self {
        let depth = levels.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); depth];
        for (i, t) in app.tasks.iter().enumerate() {
            out[levels[i]].push(QueuedTask {
                task: i,
                id: t.id,
                key: keys[i],
            });
        }
        for level in &mut out {
            level.sort_by(|a, b| a.key.total_cmp(&b.key).then(a.id.cmp(&b.id)));
        }
        ProcessQueue { levels: out }
    }

    pub fn levels(&self) -> &[Vec<QueuedTask>] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Levels in consumption order, each in consumption order.
    pub fn consumption(&self) -> Vec<Vec<QueuedTask>> {
        self.levels
            .iter()
            .rev()
            .map(|l| l.iter().rev().copied().collect())
            .collect()
    }

    /// Flat storage order with `-1` closing each level.
    pub fn to_marked_sequence(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.len() + self.levels.len());
        for level in &self.levels {
            out.extend(level.iter().map(|q| q.id.0 as i64));
            out.push(-1);
        }
        out
    }
}

/// Weighted multi-dimensional order.
pub fn order_tasks(
    app: &Application,
    graph: &ResourceGraph,
    params: &OrderParams,
) -> Result<ProcessQueue, OrderingError> {
    let wv = critical_values(app, graph, params)?;
    order_with_values(app, &wv, params.delta)
}

/// Same as [`order_tasks`] with critical values already computed.
pub fn order_with_values(
    app: &Application,
    wv: &[f64],
    delta: f64,
) -> Result<ProcessQueue, OrderingError> {
    let levels = task_levels(app)?;
    let od = app.out_degrees();
    let mcv: Vec<f64> = wv
        .iter()
        .zip(&od)
        .map(|(&w, &d)| mean_critical_value(w, d, delta))
        .collect();
    Ok(ProcessQueue::from_keys(app, &levels, &mcv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineOrder {
    Priority,
    Random,
}

/// Same levels as the weighted order; within a level either raw priority
/// (highest consumed first) or a random permutation.
pub fn baseline_order(
    app: &Application,
    kind: BaselineOrder,
    rng: &mut impl Rng,
) -> Result<ProcessQueue, OrderingError> {
    let levels = task_levels(app)?;
    match kind {
        BaselineOrder::Priority => {
            let keys: Vec<f64> = app.tasks.iter().map(|t| t.priority as f64).collect();
            Ok(ProcessQueue::from_keys(app, &levels, &keys))
        }
        BaselineOrder::Random => {
            let zeros = vec![0.0; app.tasks.len()];
            let mut q = ProcessQueue::from_keys(app, &levels, &zeros);
            for level in &mut q.levels {
                level.shuffle(rng);
            }
            Ok(q)
        }
    }
}
