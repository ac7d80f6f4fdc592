//! Location selection for tasks and path mapping for task edges.
//!
//! Levels of the process queue are placed root level first. Each task
//! searches outward from its children's hosts (or the application's home FN
//! when none are placed) through the 1-hop and 2-hop rings and falls back to
//! the cloud. After a level's edges are mapped its reservations are released
//! before the next level, since levels run one after another.

mod matrix;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::PlacementError;
use crate::ordering::{ProcessQueue, QueuedTask};
use crate::topology::{LinkId, LinkView, NodeId, PhysicalPath, ResourceGraph};
use crate::workload::{Application, Task, TaskId};

pub use matrix::ResourceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub src: TaskId,
    pub dst: TaskId,
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

impl std::str::FromStr for EdgeKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once("->").ok_or_else(|| format!("bad edge key `{s}`"))?;
        let parse = |x: &str| x.trim().parse::<u32>().map(TaskId).map_err(|_| format!("bad edge key `{s}`"));
        Ok(EdgeKey {
            src: parse(a)?,
            dst: parse(b)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeMapping {
    Mapped(PhysicalPath),
    /// Both endpoints were located but no path had enough bandwidth.
    Unmapped { required_mbps: u64 },
    /// An endpoint was never located.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rejection {
    pub task: TaskId,
    pub reason: String,
}

/// Soft-constraint findings the heuristic reports instead of enforcing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacementViolation {
    LatencyExceeded {
        src: TaskId,
        dst: TaskId,
        latency_ms: f64,
        max_latency_ms: f64,
    },
    UnmappedEdge {
        src: TaskId,
        dst: TaskId,
        required_mbps: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub app_id: u32,
    pub home_fn: NodeId,
    /// Task locations; a well-formed placement lists each task once.
    pub assignments: Vec<(TaskId, NodeId)>,
    pub edge_paths: BTreeMap<EdgeKey, EdgeMapping>,
    pub rejected: Vec<Rejection>,
    pub violations: Vec<PlacementViolation>,
    /// Set when no task could fit on the home FN at any point, which exempts
    /// the placement from the home-FN constraint.
    pub home_fn_unavailable: bool,
}

impl Placement {
    pub fn empty(app: &Application) -> Self {
        Placement {
            app_id: app.id,
            home_fn: app.home_fn,
            assignments: Vec::new(),
            edge_paths: BTreeMap::new(),
            rejected: Vec::new(),
            violations: Vec::new(),
            home_fn_unavailable: false,
        }
    }

    pub fn location(&self, task: TaskId) -> Option<NodeId> {
        self.assignments.iter().find(|(t, _)| *t == task).map(|&(_, n)| n)
    }

    pub fn locations(&self) -> HashMap<TaskId, NodeId> {
        self.assignments.iter().copied().collect()
    }

    pub fn uses_home(&self) -> bool {
        self.assignments.iter().any(|&(_, n)| n == self.home_fn)
    }

    pub fn path(&self, src: TaskId, dst: TaskId) -> Option<&PhysicalPath> {
        match self.edge_paths.get(&EdgeKey { src, dst }) {
            Some(EdgeMapping::Mapped(p)) => Some(p),
            _ => None,
        }
    }

    pub fn to_doc(&self) -> PlacementDoc {
        let mut paths = BTreeMap::new();
        let mut unmapped = Vec::new();
        for (k, m) in &self.edge_paths {
            match m {
                EdgeMapping::Mapped(p) => {
                    paths.insert(k.to_string(), p.nodes.clone());
                }
                EdgeMapping::Unmapped { .. } => unmapped.push(k.to_string()),
                EdgeMapping::Ignored => {}
            }
        }
        PlacementDoc {
            app_id: self.app_id,
            home_fn: self.home_fn,
            locations: self.assignments.iter().copied().collect(),
            paths,
            unmapped,
            rejected: self.rejected.clone(),
            violations: self.violations.clone(),
            home_fn_unavailable: self.home_fn_unavailable,
        }
    }

    /// Rebuild from a document, resolving node paths against `graph` with the
    /// graph's nominal link latencies and bandwidths.
    pub fn from_doc(doc: PlacementDoc, app: &Application, graph: &ResourceGraph) -> Result<Self, PlacementError> {
        let parse = |m: String| PlacementError::Parse(m);
        let mut edge_paths = BTreeMap::new();
        for e in &app.edges {
            edge_paths.insert(EdgeKey { src: e.src, dst: e.dst }, EdgeMapping::Ignored);
        }
        for (key, nodes) in doc.paths {
            let k: EdgeKey = key.parse().map_err(parse)?;
            if !edge_paths.contains_key(&k) {
                return Err(parse(format!("path for unknown edge {k}")));
            }
            let mut links = Vec::new();
            for w in nodes.windows(2) {
                links.push(
                    graph
                        .link_between(w[0], w[1])
                        .ok_or_else(|| parse(format!("edge {k}: no link {}-{}", w[0], w[1])))?,
                );
            }
            if nodes.is_empty() {
                return Err(parse(format!("edge {k}: empty node list")));
            }
            let path = PhysicalPath {
                total_latency_ms: links.iter().map(|&l| graph.latency(l)).sum(),
                min_bandwidth_mbps: links.iter().map(|&l| graph.residual_bandwidth(l)).min(),
                nodes,
                links,
            };
            edge_paths.insert(k, EdgeMapping::Mapped(path));
        }
        for key in doc.unmapped {
            let k: EdgeKey = key.parse().map_err(parse)?;
            let e = app
                .edges
                .iter()
                .find(|e| e.src == k.src && e.dst == k.dst)
                .ok_or_else(|| parse(format!("unknown unmapped edge {k}")))?;
            edge_paths.insert(
                k,
                EdgeMapping::Unmapped {
                    required_mbps: e.bandwidth_mbps,
                },
            );
        }
        Ok(Placement {
            app_id: doc.app_id,
            home_fn: doc.home_fn,
            assignments: doc.locations.into_iter().collect(),
            edge_paths,
            rejected: doc.rejected,
            violations: doc.violations,
            home_fn_unavailable: doc.home_fn_unavailable,
        })
    }
}

/// JSON form of a [`Placement`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDoc {
    pub app_id: u32,
    pub home_fn: NodeId,
    pub locations: BTreeMap<TaskId, NodeId>,
    pub paths: BTreeMap<String, Vec<NodeId>>,
    #[serde(default)]
    pub unmapped: Vec<String>,
    #[serde(default)]
    pub rejected: Vec<Rejection>,
    #[serde(default)]
    pub violations: Vec<PlacementViolation>,
    #[serde(default)]
    pub home_fn_unavailable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementPolicy {
    /// Multi-hop ring search around child hosts or the home FN.
    #[default]
    Herafc,
    /// Home FN if it fits, otherwise the cloud.
    CloudFirst,
}

/// First candidate whose residual CPU and memory both cover the task.
pub fn try_deploy(task: &Task, candidates: &[NodeId], rm: &ResourceMatrix) -> Option<NodeId> {
    candidates
        .iter()
        .copied()
        .find(|&n| rm.fits(n, task.cpu, task.mem_mb))
}

/// Reservations made while placing one level, released when it completes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelReservation {
    pub compute: Vec<(NodeId, u64, u64)>,
    pub bandwidth: Vec<(LinkId, u64)>,
}

impl LevelReservation {
    pub fn release(&self, rm: &mut ResourceMatrix, graph: &ResourceGraph) -> Result<(), PlacementError> {
        for &(n, c, m) in &self.compute {
            rm.credit(n, c, m)?;
        }
        for &(l, b) in &self.bandwidth {
            rm.credit_bandwidth(l, b, graph)?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.compute.is_empty() && self.bandwidth.is_empty()
    }
}

/// Per-application state carried across levels.
#[derive(Debug, Clone)]
pub struct AppState<'a> {
    pub app: &'a Application,
    pub placement: Placement,
    located: Vec<Option<NodeId>>,
    children: Vec<Vec<usize>>,
    /// Edge positions adjacent to each task.
    incident: Vec<Vec<usize>>,
    index: HashMap<TaskId, usize>,
}

impl<'a> AppState<'a> {
    pub fn new(app: &'a Application) -> Self {
        let index = app.task_index();
        let mut incident = vec![Vec::new(); app.tasks.len()];
        let mut placement = Placement::empty(app);
        for (i, e) in app.edges.iter().enumerate() {
            incident[index[&e.src]].push(i);
            incident[index[&e.dst]].push(i);
            placement
                .edge_paths
                .insert(EdgeKey { src: e.src, dst: e.dst }, EdgeMapping::Ignored);
        }
        AppState {
            app,
            placement,
            located: vec![None; app.tasks.len()],
            children: app.children(),
            incident,
            index,
        }
    }

    pub fn located(&self, task: usize) -> Option<NodeId> {
        self.located[task]
    }

    fn candidates(&self, task: usize, graph: &ResourceGraph, policy: PlacementPolicy) -> Vec<NodeId> {
        let home = self.app.home_fn;
        if policy == PlacementPolicy::CloudFirst {
            return vec![home, NodeId::CLOUD];
        }
        let mut origins: Vec<NodeId> = self.children[task]
            .iter()
            .filter_map(|&c| self.located[c])
            .collect();
        origins.sort_unstable();
        origins.dedup();
        if origins.is_empty() {
            origins.push(home);
        }
        let mut out = origins.clone();
        out.extend(
            graph
                .candidates_within(&origins, graph.max_hops())
                .into_iter()
                .map(|(n, _)| n),
        );
        if !out.contains(&NodeId::CLOUD) {
            out.push(NodeId::CLOUD);
        }
        out
    }

    fn assign(&mut self, task: usize, node: NodeId, rm: &mut ResourceMatrix, res: &mut LevelReservation) -> Result<(), PlacementError> {
        let t = &self.app.tasks[task];
        rm.debit(node, t.cpu, t.mem_mb)?;
        res.compute.push((node, t.cpu, t.mem_mb));
        self.located[task] = Some(node);
        self.placement.assignments.push((t.id, node));
        Ok(())
    }

    /// Place one level's tasks in the given order, then map their incident
    /// edges. `pinned` is placed on the home FN first when it fits there.
    pub fn place_level(
        &mut self,
        level: &[QueuedTask],
        graph: &ResourceGraph,
        rm: &mut ResourceMatrix,
        policy: PlacementPolicy,
        pinned: Option<usize>,
    ) -> Result<LevelReservation, PlacementError> {
        let mut res = LevelReservation::default();
        let home = self.app.home_fn;
        if let Some(p) = pinned.filter(|p| level.iter().any(|q| q.task == *p)) {
            let t = &self.app.tasks[p];
            if self.located[p].is_none() && rm.fits(home, t.cpu, t.mem_mb) {
                self.assign(p, home, rm, &mut res)?;
            }
        }
        for q in level {
            if self.located[q.task].is_some() {
                continue;
            }
            let cands = self.candidates(q.task, graph, policy);
            match try_deploy(&self.app.tasks[q.task], &cands, rm) {
                Some(node) => self.assign(q.task, node, rm, &mut res)?,
                None => self.placement.rejected.push(Rejection {
                    task: q.id,
                    reason: "no candidate location has enough cpu and memory".into(),
                }),
            }
        }
        self.map_level_edges(level, graph, rm, &mut res)?;
        Ok(res)
    }

    /// Map every not-yet-mapped edge adjacent to `level` whose endpoints are
    /// both located, largest bandwidth demand first.
    fn map_level_edges(
        &mut self,
        level: &[QueuedTask],
        graph: &ResourceGraph,
        rm: &mut ResourceMatrix,
        res: &mut LevelReservation,
    ) -> Result<(), PlacementError> {
        let mut edges: Vec<usize> = level
            .iter()
            .flat_map(|q| self.incident[q.task].iter().copied())
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.sort_by(|&a, &b| {
            let (ea, eb) = (&self.app.edges[a], &self.app.edges[b]);
            eb.bandwidth_mbps
                .cmp(&ea.bandwidth_mbps)
                .then((ea.src, ea.dst).cmp(&(eb.src, eb.dst)))
        });
        for i in edges {
            let e = &self.app.edges[i];
            let key = EdgeKey { src: e.src, dst: e.dst };
            if !matches!(self.placement.edge_paths.get(&key), Some(EdgeMapping::Ignored)) {
                continue;
            }
            let (Some(a), Some(b)) = (self.located[self.index[&e.src]], self.located[self.index[&e.dst]]) else {
                continue;
            };
            match graph.shortest_path(a, b, e.bandwidth_mbps, rm) {
                Ok(path) => {
                    for &l in &path.links {
                        rm.debit_bandwidth(l, e.bandwidth_mbps, graph)?;
                        res.bandwidth.push((l, e.bandwidth_mbps));
                    }
                    if path.total_latency_ms > e.max_latency_ms {
                        self.placement.violations.push(PlacementViolation::LatencyExceeded {
                            src: e.src,
                            dst: e.dst,
                            latency_ms: path.total_latency_ms,
                            max_latency_ms: e.max_latency_ms,
                        });
                    }
                    self.placement.edge_paths.insert(key, EdgeMapping::Mapped(path));
                }
                Err(crate::error::TopologyError::NoPath { required_mbps, .. }) => {
                    self.placement.violations.push(PlacementViolation::UnmappedEdge {
                        src: e.src,
                        dst: e.dst,
                        required_mbps,
                    });
                    self.placement
                        .edge_paths
                        .insert(key, EdgeMapping::Unmapped { required_mbps });
                }
                Err(other) => return Err(other.into()),
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Placement {
        self.placement
    }
}

/// Check that `queue` lists every task of `app` exactly once.
pub fn check_queue(app: &Application, queue: &ProcessQueue) -> Result<(), PlacementError> {
    let mut seen = vec![false; app.tasks.len()];
    for q in queue.levels().iter().flatten() {
        if q.task >= seen.len() || app.tasks[q.task].id != q.id || seen[q.task] {
            return Err(PlacementError::QueueMismatch(format!("task {} misplaced", q.id)));
        }
        seen[q.task] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(PlacementError::QueueMismatch(format!("task {} missing", app.tasks[i].id)));
    }
    Ok(())
}

fn place_all(
    app: &Application,
    graph: &ResourceGraph,
    snapshot: &ResourceMatrix,
    queue: &ProcessQueue,
    policy: PlacementPolicy,
    pinned: Option<usize>,
) -> Result<Placement, PlacementError> {
    let mut state = AppState::new(app);
    let mut rm = snapshot.clone();
    for level in queue.consumption() {
        state.place_level(&level, graph, &mut rm, policy, pinned)?;
        rm.reset_to(snapshot);
    }
    Ok(state.finish())
}

/// Place one application against `rm` without changing it.
///
/// `wv` holds each task's critical value and picks the task pinned to the
/// home FN when the plain search leaves the home FN unused.
pub fn herafc_place(
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    queue: &ProcessQueue,
    wv: &[f64],
) -> Result<Placement, PlacementError> {
    place_with_policy(app, graph, rm, queue, wv, PlacementPolicy::Herafc)
}

pub fn place_with_policy(
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    queue: &ProcessQueue,
    wv: &[f64],
    policy: PlacementPolicy,
) -> Result<Placement, PlacementError> {
    rm.check_consistent(graph)?;
    check_queue(app, queue)?;
    let first = place_all(app, graph, rm, queue, policy, None)?;
    if first.uses_home() {
        return Ok(first);
    }
    let pin = app
        .tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| rm.fits(app.home_fn, t.cpu, t.mem_mb))
        .max_by(|a, b| {
            let (wa, wb) = (wv.get(a.0).copied().unwrap_or(0.0), wv.get(b.0).copied().unwrap_or(0.0));
            wa.total_cmp(&wb).then(b.1.id.cmp(&a.1.id))
        })
        .map(|(i, _)| i);
    match pin {
        Some(p) => place_all(app, graph, rm, queue, policy, Some(p)),
        None => {
            let mut out = first;
            out.home_fn_unavailable = true;
            Ok(out)
        }
    }
}

/// Cloud-first baseline: each task on the home FN when it fits, else cloud.
pub fn baseline_cloud_first(
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    queue: &ProcessQueue,
) -> Result<Placement, PlacementError> {
    place_with_policy(app, graph, rm, queue, &[], PlacementPolicy::CloudFirst)
}
