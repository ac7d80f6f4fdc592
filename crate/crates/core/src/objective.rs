//! Objective scores and constraint checks for placements.
//!
//! Scores add milliseconds, hop counts and inverse bandwidths as written in
//! the underlying formulation. They are unitless comparators only.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::ObjectiveError;
use crate::ordering::task_levels;
use crate::placement::{EdgeKey, EdgeMapping, Placement, ResourceMatrix};
use crate::topology::{LinkId, LinkView, NodeId, ResourceGraph};
use crate::workload::{Application, TaskId};

impl Serialize for EdgeKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    pub task_terms: Vec<(TaskId, f64)>,
    pub edge_latency_terms: Vec<(EdgeKey, f64)>,
    pub edge_bandwidth_terms: Vec<(EdgeKey, f64)>,
    pub total: f64,
}

impl ObjectiveBreakdown {
    fn from_parts(
        task_terms: Vec<(TaskId, f64)>,
        edge_latency_terms: Vec<(EdgeKey, f64)>,
        edge_bandwidth_terms: Vec<(EdgeKey, f64)>,
    ) -> Self {
        let total = task_terms.iter().map(|t| t.1).sum::<f64>()
            + edge_latency_terms.iter().map(|t| t.1).sum::<f64>()
            + edge_bandwidth_terms.iter().map(|t| t.1).sum::<f64>();
        ObjectiveBreakdown {
            task_terms,
            edge_latency_terms,
            edge_bandwidth_terms,
            total,
        }
    }

    /// Sum of all parts, recomputed.
    pub fn parts_sum(&self) -> f64 {
        self.task_terms
            .iter()
            .map(|t| t.1)
            .chain(self.edge_latency_terms.iter().map(|t| t.1))
            .chain(self.edge_bandwidth_terms.iter().map(|t| t.1))
            .sum()
    }
}

/// Which residual resource a task term divides by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ResourceKind {
    Cpu,
    Memory,
    /// `w/R_cpu + (1 − w)/R_mem`.
    Blend { cpu_weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveParams {
    /// Fog-preference factor applied to the home FN, in (0, 1).
    pub big_delta: f64,
    pub resource: ResourceKind,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams {
            big_delta: 0.5,
            resource: ResourceKind::Cpu,
        }
    }
}

impl ObjectiveParams {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if !(self.big_delta > 0.0 && self.big_delta < 1.0) {
            return Err(ObjectiveError::InvalidModel(format!(
                "Δ must lie strictly between 0 and 1, got {}",
                self.big_delta
            )));
        }
        if let ResourceKind::Blend { cpu_weight } = self.resource {
            if !(0.0..=1.0).contains(&cpu_weight) {
                return Err(ObjectiveError::InvalidModel(format!(
                    "cpu_weight must lie in [0, 1], got {cpu_weight}"
                )));
            }
        }
        Ok(())
    }
}

fn inverse_residual(node: NodeId, rm: &ResourceMatrix, kind: ResourceKind) -> Result<f64, ObjectiveError> {
    let inv = |v: u64, what: &'static str| {
        if v == 0 {
            Err(ObjectiveError::ZeroResidual(node.to_string(), what))
        } else {
            Ok(1.0 / v as f64)
        }
    };
    match kind {
        ResourceKind::Cpu => inv(rm.residual_cpu(node), "cpu"),
        ResourceKind::Memory => inv(rm.residual_mem(node), "memory"),
        ResourceKind::Blend { cpu_weight } => Ok(cpu_weight * inv(rm.residual_cpu(node), "cpu")?
            + (1.0 - cpu_weight) * inv(rm.residual_mem(node), "memory")?),
    }
}

/// Score a placement on the MultiFog-Cloud graph.
///
/// Task term: `c / R^x` with `c = Δ` on the home FN and 1 elsewhere, `R^x`
/// read from `rm`. Edge terms: path latency plus FCI hop count, and the
/// inverse of the path's bottleneck bandwidth. Same-node edges score 0.
pub fn eval_mfc(
    placement: &Placement,
    app: &Application,
    rm: &ResourceMatrix,
    params: &ObjectiveParams,
) -> Result<ObjectiveBreakdown, ObjectiveError> {
    params.validate()?;
    let mut seen: HashMap<TaskId, NodeId> = HashMap::new();
    for &(t, n) in &placement.assignments {
        if seen.insert(t, n).is_some() {
            return Err(ObjectiveError::MultiplyAssigned(t));
        }
    }
    let mut task_terms = Vec::with_capacity(app.tasks.len());
    for t in &app.tasks {
        let node = *seen.get(&t.id).ok_or(ObjectiveError::UnassignedTask(t.id))?;
        let coeff = if node == app.home_fn { params.big_delta } else { 1.0 };
        task_terms.push((t.id, coeff * inverse_residual(node, rm, params.resource)?));
    }
    let mut lat = Vec::with_capacity(app.edges.len());
    let mut bw = Vec::with_capacity(app.edges.len());
    for e in &app.edges {
        let key = EdgeKey { src: e.src, dst: e.dst };
        let path = match placement.edge_paths.get(&key) {
            Some(EdgeMapping::Mapped(p)) => p,
            _ => return Err(ObjectiveError::UnmappedEdge(e.src, e.dst)),
        };
        if path.is_empty() {
            lat.push((key, 0.0));
            bw.push((key, 0.0));
        } else {
            lat.push((key, path.total_latency_ms + path.hop_count() as f64));
            let b = path.min_bandwidth_mbps.unwrap_or(0);
            if b == 0 {
                return Err(ObjectiveError::ZeroResidual(key.to_string(), "bandwidth"));
            }
            bw.push((key, 1.0 / b as f64));
        }
    }
    Ok(ObjectiveBreakdown::from_parts(task_terms, lat, bw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServerTier {
    Cloud,
    Fog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Server {
    pub tier: ServerTier,
    /// Residual of the scoring resource.
    pub residual: f64,
    pub cpu: u64,
    pub mem_mb: u64,
}

/// One cloud and one fog environment made of servers joined pairwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleFogModel {
    pub servers: Vec<Server>,
    /// Pairwise bandwidth (Mbps), symmetric.
    pub alpha: Vec<Vec<f64>>,
    /// Pairwise latency (ms), symmetric; cross-tier entries are replaced by
    /// `kappa` when scoring.
    pub beta: Vec<Vec<f64>>,
    pub kappa: f64,
    pub big_delta: f64,
}

impl SingleFogModel {
    /// Build with `kappa = kappa_floor + 1`.
    pub fn new(servers: Vec<Server>, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>, big_delta: f64) -> Self {
        let mut m = SingleFogModel {
            servers,
            alpha,
            beta,
            kappa: 0.0,
            big_delta,
        };
        m.kappa = kappa_floor(&m) + 1.0;
        m
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let n = self.servers.len();
        if self.alpha.len() != n || self.beta.len() != n || self.alpha.iter().chain(&self.beta).any(|r| r.len() != n) {
            return Err(ObjectiveError::InvalidModel("α/β matrices must be n×n".into()));
        }
        if !(self.big_delta > 0.0 && self.big_delta < 1.0) {
            return Err(ObjectiveError::InvalidModel(format!("Δ = {} outside (0, 1)", self.big_delta)));
        }
        let floor = kappa_floor(self);
        if !(self.kappa > floor) {
            return Err(ObjectiveError::InvalidModel(format!(
                "κ = {} must exceed the largest intra-tier latency {floor}",
                self.kappa
            )));
        }
        Ok(())
    }

    fn pair_latency(&self, a: usize, b: usize) -> f64 {
        if self.servers[a].tier != self.servers[b].tier {
            self.kappa
        } else {
            self.beta[a][b]
        }
    }
}

/// Largest latency between two servers of the same tier; 0 when no tier
/// has two servers.
pub fn kappa_floor(model: &SingleFogModel) -> f64 {
    let n = model.servers.len();
    let mut floor = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            if model.servers[a].tier == model.servers[b].tier {
                floor = floor.max(model.beta[a][b]);
            }
        }
    }
    floor
}

/// Task and edge demands for the single-fog model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleFogInstance {
    pub tasks: Vec<(u64, u64)>,
    /// `(src, dst, bandwidth demand, max latency)`.
    pub edges: Vec<(usize, usize, f64, f64)>,
}

/// Server assignment per task; more than one entry is a violation.
pub type SingleFogAssignment = Vec<Vec<usize>>;

pub fn eval_single_fog(
    assignment: &SingleFogAssignment,
    instance: &SingleFogInstance,
    model: &SingleFogModel,
) -> Result<ObjectiveBreakdown, ObjectiveError> {
    model.validate()?;
    let host = |i: usize| -> Result<usize, ObjectiveError> {
        match assignment.get(i).map(Vec::as_slice) {
            Some([s]) => Ok(*s),
            Some([]) | None => Err(ObjectiveError::UnassignedTask(TaskId(i as u32))),
            Some(_) => Err(ObjectiveError::MultiplyAssigned(TaskId(i as u32))),
        }
    };
    let mut task_terms = Vec::new();
    for i in 0..instance.tasks.len() {
        let s = host(i)?;
        let server = &model.servers[s];
        if !(server.residual > 0.0) {
            return Err(ObjectiveError::ZeroResidual(format!("server {s}"), "resource"));
        }
        let coeff = match server.tier {
            ServerTier::Cloud => 1.0,
            ServerTier::Fog => model.big_delta,
        };
        task_terms.push((TaskId(i as u32), coeff / server.residual));
    }
    let mut lat = Vec::new();
    let mut bw = Vec::new();
    for &(a, b, _, _) in &instance.edges {
        let key = EdgeKey {
            src: TaskId(a as u32),
            dst: TaskId(b as u32),
        };
        let (sa, sb) = (host(a)?, host(b)?);
        if sa == sb {
            lat.push((key, 0.0));
            bw.push((key, 0.0));
            continue;
        }
        let alpha = model.alpha[sa][sb];
        if !(alpha > 0.0) {
            return Err(ObjectiveError::MissingLink(sa, sb));
        }
        lat.push((key, model.pair_latency(sa, sb)));
        bw.push((key, 1.0 / alpha));
    }
    Ok(ObjectiveBreakdown::from_parts(task_terms, lat, bw))
}

/// A constraint a placement breaks, with the offending entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintViolation {
    /// A task has no location.
    Unassigned { task: TaskId },
    /// A task has more than one location.
    MultiplyAssigned { task: TaskId },
    /// Co-running tasks exceed a node's resource.
    Capacity {
        node: String,
        resource: String,
        demand: u64,
        capacity: u64,
    },
    /// An edge has no path, or reservations exceed a link's bandwidth.
    Bandwidth { edge: String, detail: String },
    /// A mapped path is slower than the edge allows.
    Latency {
        edge: String,
        latency_ms: f64,
        max_latency_ms: f64,
    },
    /// No task sits on the application's home FN.
    HomeUnused { home: NodeId },
    /// Path or assignment inconsistent with the graph.
    Structural { detail: String },
}

impl ConstraintViolation {
    pub fn is_assignment(&self) -> bool {
        matches!(self, Self::Unassigned { .. } | Self::MultiplyAssigned { .. })
    }
}

/// Check a MultiFog-Cloud placement. Capacities come from `rm` residuals;
/// tasks of one level run together, levels run one after another.
pub fn check_constraints(
    placement: &Placement,
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    let mut locs: BTreeMap<TaskId, Vec<NodeId>> = BTreeMap::new();
    for &(t, n) in &placement.assignments {
        locs.entry(t).or_default().push(n);
        if !graph.contains(n) || !n.is_host() {
            out.push(ConstraintViolation::Structural {
                detail: format!("task {t} assigned to non-host {n}"),
            });
        }
        if !app.tasks.iter().any(|x| x.id == t) {
            out.push(ConstraintViolation::Structural {
                detail: format!("assignment for unknown task {t}"),
            });
        }
    }
    for t in &app.tasks {
        match locs.get(&t.id).map(Vec::len).unwrap_or(0) {
            0 => out.push(ConstraintViolation::Unassigned { task: t.id }),
            1 => {}
            _ => out.push(ConstraintViolation::MultiplyAssigned { task: t.id }),
        }
    }

    let levels = task_levels(app).ok();
    let index = app.task_index();
    let level_of = |t: TaskId| levels.as_ref().map_or(0, |l| l[index[&t]]);

    // Per level, per node demand.
    let mut demand: BTreeMap<(usize, NodeId), (u64, u64)> = BTreeMap::new();
    for t in &app.tasks {
        if let Some(&[n]) = locs.get(&t.id).map(Vec::as_slice) {
            if graph.contains(n) && n.is_host() {
                let d = demand.entry((level_of(t.id), n)).or_default();
                d.0 += t.cpu;
                d.1 += t.mem_mb;
            }
        }
    }
    for (&(_, n), &(cpu, mem)) in &demand {
        if cpu > rm.residual_cpu(n) {
            out.push(ConstraintViolation::Capacity {
                node: n.to_string(),
                resource: "cpu".into(),
                demand: cpu,
                capacity: rm.residual_cpu(n),
            });
        }
        if mem > rm.residual_mem(n) {
            out.push(ConstraintViolation::Capacity {
                node: n.to_string(),
                resource: "memory".into(),
                demand: mem,
                capacity: rm.residual_mem(n),
            });
        }
    }

    let mut link_load: BTreeMap<(usize, LinkId), u64> = BTreeMap::new();
    for e in &app.edges {
        let key = EdgeKey { src: e.src, dst: e.dst };
        let ends = (
            locs.get(&e.src).and_then(|v| v.first().copied()),
            locs.get(&e.dst).and_then(|v| v.first().copied()),
        );
        match placement.edge_paths.get(&key) {
            Some(EdgeMapping::Mapped(p)) => {
                let (Some(a), Some(b)) = ends else {
                    out.push(ConstraintViolation::Structural {
                        detail: format!("edge {key} mapped with an unassigned endpoint"),
                    });
                    continue;
                };
                if p.nodes.first() != Some(&a) || p.nodes.last() != Some(&b) {
                    out.push(ConstraintViolation::Structural {
                        detail: format!("edge {key} path does not join {a} and {b}"),
                    });
                }
                let linked = p.links.len() + 1 == p.nodes.len()
                    && p.links.iter().zip(p.nodes.windows(2)).all(|(&l, w)| graph.link_between(w[0], w[1]) == Some(l));
                if !linked {
                    out.push(ConstraintViolation::Structural {
                        detail: format!("edge {key} path is not a chain of graph links"),
                    });
                }
                for &l in &p.links {
                    *link_load.entry((level_of(e.dst), l)).or_default() += e.bandwidth_mbps;
                }
                if p.total_latency_ms > e.max_latency_ms {
                    out.push(ConstraintViolation::Latency {
                        edge: key.to_string(),
                        latency_ms: p.total_latency_ms,
                        max_latency_ms: e.max_latency_ms,
                    });
                }
            }
            Some(EdgeMapping::Unmapped { required_mbps }) => out.push(ConstraintViolation::Bandwidth {
                edge: key.to_string(),
                detail: format!("no path with {required_mbps} Mbps"),
            }),
            Some(EdgeMapping::Ignored) | None => {
                if ends.0.is_some() && ends.1.is_some() {
                    out.push(ConstraintViolation::Bandwidth {
                        edge: key.to_string(),
                        detail: "endpoints placed but edge not mapped".into(),
                    });
                }
            }
        }
    }
    for (&(_, l), &load) in &link_load {
        let residual = rm.residual_bandwidth(l);
        if load > residual {
            let link = graph.link(l);
            out.push(ConstraintViolation::Bandwidth {
                edge: format!("{}-{}", link.a, link.b),
                detail: format!("{load} Mbps reserved over {residual} Mbps residual"),
            });
        }
    }

    if !placement.home_fn_unavailable && !placement.assignments.iter().any(|&(_, n)| n == app.home_fn) {
        out.push(ConstraintViolation::HomeUnused { home: app.home_fn });
    }
    out
}

/// Check a single-fog assignment: one server per task, strict capacity,
/// link bandwidth above demand, latency below the allowed maximum, and
/// model parameters.
pub fn check_single_fog(
    assignment: &SingleFogAssignment,
    instance: &SingleFogInstance,
    model: &SingleFogModel,
) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    if let Err(e) = model.validate() {
        out.push(ConstraintViolation::Structural { detail: e.to_string() });
    }
    let mut cpu = vec![0u64; model.servers.len()];
    let mut mem = vec![0u64; model.servers.len()];
    for (i, &(c, m)) in instance.tasks.iter().enumerate() {
        let hosts = assignment.get(i).map(Vec::as_slice).unwrap_or(&[]);
        match hosts {
            [] => out.push(ConstraintViolation::Unassigned { task: TaskId(i as u32) }),
            [s] => {
                cpu[*s] += c;
                mem[*s] += m;
            }
            _ => out.push(ConstraintViolation::MultiplyAssigned { task: TaskId(i as u32) }),
        }
    }
    for (s, server) in model.servers.iter().enumerate() {
        if cpu[s] > 0 && cpu[s] >= server.cpu {
            out.push(ConstraintViolation::Capacity {
                node: format!("server {s}"),
                resource: "cpu".into(),
                demand: cpu[s],
                capacity: server.cpu,
            });
        }
        if mem[s] > 0 && mem[s] >= server.mem_mb {
            out.push(ConstraintViolation::Capacity {
                node: format!("server {s}"),
                resource: "memory".into(),
                demand: mem[s],
                capacity: server.mem_mb,
            });
        }
    }
    for &(a, b, need_bw, max_lat) in &instance.edges {
        let (Some([sa]), Some([sb])) = (
            assignment.get(a).map(Vec::as_slice),
            assignment.get(b).map(Vec::as_slice),
        ) else {
            continue;
        };
        if sa == sb {
            continue;
        }
        let edge = format!("{a}->{b}");
        if !(model.alpha[*sa][*sb] > need_bw) {
            out.push(ConstraintViolation::Bandwidth {
                edge: edge.clone(),
                detail: format!("link offers {} Mbps for a {need_bw} Mbps demand", model.alpha[*sa][*sb]),
            });
        }
        let lat = model.pair_latency(*sa, *sb);
        if !(lat < max_lat) {
            out.push(ConstraintViolation::Latency {
                edge,
                latency_ms: lat,
                max_latency_ms: max_lat,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::{critical_values, order_tasks, OrderParams};
    use crate::placement::herafc_place;
    use crate::topology::{GraphBuilder, PhysicalPath};
    use crate::workload::fixtures::{app, edge, task};
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    /// F0, F1 under I0; cloud behind I0. F0 cpu 50, F1 cpu 50.
    fn pair() -> ResourceGraph {
        let mut b = GraphBuilder::new();
        let i = b.add_fci();
        b.add_fn_linked(50, 1000, i, 350, 75.0);
        b.add_fn_linked(50, 1000, i, 300, 60.0);
        b.link(i, NodeId::CLOUD, 500, 150.0);
        b.cloud(1000, 100_000);
        b.build().unwrap()
    }

    fn placed(a: &Application, locs: &[(u32, NodeId)], g: &ResourceGraph) -> Placement {
        let rm = ResourceMatrix::new(g);
        let mut p = Placement::empty(a);
        p.assignments = locs.iter().map(|&(t, n)| (TaskId(t), n)).collect();
        for e in &a.edges {
            let (x, y) = (p.location(e.src).unwrap(), p.location(e.dst).unwrap());
            let path = g.shortest_path(x, y, e.bandwidth_mbps, &rm).unwrap();
            p.edge_paths.insert(EdgeKey { src: e.src, dst: e.dst }, EdgeMapping::Mapped(path));
        }
        p
    }

    #[test]
    fn task_terms_home_vs_remote() {
        let g = pair();
        let rm = ResourceMatrix::new(&g);
        let a = app(vec![task(0, 1, 1, 1, 1)], vec![], NodeId::fog(0));
        let home = eval_mfc(&placed(&a, &[(0, NodeId::fog(0))], &g), &a, &rm, &ObjectiveParams::default()).unwrap();
        assert!(close(home.total, 0.01));
        let remote = eval_mfc(&placed(&a, &[(0, NodeId::fog(1))], &g), &a, &rm, &ObjectiveParams::default()).unwrap();
        assert!(close(remote.total, 0.02));
    }

    #[test]
    fn edge_latency_adds_hops() {
        let g = pair();
        let rm = ResourceMatrix::new(&g);
        let a = app(vec![task(0, 1, 1, 1, 1), task(1, 1, 1, 1, 1)], vec![edge(0, 1, 100)], NodeId::fog(0));
        let p = placed(&a, &[(0, NodeId::fog(0)), (1, NodeId::CLOUD)], &g);
        let b = eval_mfc(&p, &a, &rm, &ObjectiveParams::default()).unwrap();
        assert!(close(b.edge_latency_terms[0].1, 75.0 + 150.0 + 1.0));
        assert!(close(b.edge_bandwidth_terms[0].1, 1.0 / 350.0));
        assert!(close(b.total, b.parts_sum()));
    }

    #[test]
    fn same_node_edge_scores_zero() {
        let g = pair();
        let rm = ResourceMatrix::new(&g);
        let a = app(vec![task(0, 1, 1, 1, 1), task(1, 1, 1, 1, 1)], vec![edge(0, 1, 100)], NodeId::fog(0));
        let p = placed(&a, &[(0, NodeId::fog(0)), (1, NodeId::fog(0))], &g);
        let b = eval_mfc(&p, &a, &rm, &ObjectiveParams::default()).unwrap();
        assert_eq!(b.edge_latency_terms[0].1, 0.0);
        assert_eq!(b.edge_bandwidth_terms[0].1, 0.0);
    }

    #[test]
    fn unassigned_is_an_error() {
        let g = pair();
        let a = app(vec![task(0, 1, 1, 1, 1)], vec![], NodeId::fog(0));
        let p = Placement::empty(&a);
        assert_eq!(
            eval_mfc(&p, &a, &ResourceMatrix::new(&g), &ObjectiveParams::default()),
            Err(ObjectiveError::UnassignedTask(TaskId(0)))
        );
    }

    fn model() -> SingleFogModel {
        let servers = vec![
            Server { tier: ServerTier::Cloud, residual: 50.0, cpu: 100, mem_mb: 1000 },
            Server { tier: ServerTier::Cloud, residual: 50.0, cpu: 100, mem_mb: 1000 },
            Server { tier: ServerTier::Fog, residual: 50.0, cpu: 100, mem_mb: 1000 },
            Server { tier: ServerTier::Fog, residual: 50.0, cpu: 100, mem_mb: 1000 },
        ];
        let beta = vec![
            vec![0.0, 5.0, 0.0, 0.0],
            vec![5.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 75.0],
            vec![0.0, 0.0, 75.0, 0.0],
        ];
        let alpha = vec![vec![350.0; 4]; 4];
        SingleFogModel::new(servers, alpha, beta, 0.5)
    }

    #[test]
    fn kappa_floor_examples() {
        let mut m = model();
        m.beta[2][3] = 100.0;
        m.beta[3][2] = 100.0;
        assert_eq!(kappa_floor(&m), 100.0);
        m.kappa = 101.0;
        assert!(m.validate().is_ok());
        m.kappa = 100.0;
        assert!(m.validate().is_err());
        let single = SingleFogModel::new(
            vec![
                Server { tier: ServerTier::Cloud, residual: 1.0, cpu: 1, mem_mb: 1 },
                Server { tier: ServerTier::Fog, residual: 1.0, cpu: 1, mem_mb: 1 },
            ],
            vec![vec![1.0; 2]; 2],
            vec![vec![0.0, 9.0], vec![9.0, 0.0]],
            0.5,
        );
        assert_eq!(kappa_floor(&single), 0.0);
    }

    #[test]
    fn single_fog_terms() {
        let m = model();
        let inst = SingleFogInstance {
            tasks: vec![(1, 1), (1, 1)],
            edges: vec![(0, 1, 100.0, 1000.0)],
        };
        let b = eval_single_fog(&vec![vec![2], vec![3]], &inst, &m).unwrap();
        assert!(close(b.task_terms[0].1, 0.01));
        assert!(close(b.edge_latency_terms[0].1 + b.edge_bandwidth_terms[0].1, 75.0 + 1.0 / 350.0));
        let cloud = eval_single_fog(&vec![vec![0], vec![3]], &inst, &m).unwrap();
        assert!(close(b.task_terms[0].1, 0.5 * cloud.task_terms[0].1));
        assert!(close(cloud.edge_latency_terms[0].1, m.kappa));
    }

    #[test]
    fn single_fog_constraints() {
        let m = model();
        let inst = SingleFogInstance {
            tasks: vec![(60, 1), (60, 1)],
            edges: vec![(0, 1, 400.0, 50.0)],
        };
        let v = check_single_fog(&vec![vec![2, 3], vec![]], &inst, &m);
        assert!(v.contains(&ConstraintViolation::MultiplyAssigned { task: TaskId(0) }));
        assert!(v.contains(&ConstraintViolation::Unassigned { task: TaskId(1) }));
        let v = check_single_fog(&vec![vec![2], vec![2]], &inst, &m);
        assert!(matches!(v[0], ConstraintViolation::Capacity { .. }));
        let v = check_single_fog(&vec![vec![2], vec![3]], &inst, &m);
        assert!(v.iter().any(|x| matches!(x, ConstraintViolation::Bandwidth { .. })));
        assert!(v.iter().any(|x| matches!(x, ConstraintViolation::Latency { .. })));
        let mut bad = m.clone();
        bad.big_delta = 1.0;
        assert!(!check_single_fog(&vec![vec![2], vec![3]], &inst, &bad).is_empty());
    }

    #[test]
    fn mfc_flags_constructed_violations() {
        let g = pair();
        let rm = ResourceMatrix::new(&g);
        let a = app(
            vec![task(0, 30, 1, 1, 1), task(1, 30, 1, 1, 1), task(2, 1, 1, 1, 1)],
            vec![edge(0, 2, 100), edge(1, 2, 100)],
            NodeId::fog(0),
        );
        // All on cloud: home unused only.
        let cloud = placed(&a, &[(0, NodeId::CLOUD), (1, NodeId::CLOUD), (2, NodeId::CLOUD)], &g);
        assert_eq!(
            check_constraints(&cloud, &a, &g, &rm),
            vec![ConstraintViolation::HomeUnused { home: NodeId::fog(0) }]
        );
        // Tasks 0 and 1 share a level and overflow F1.
        let crowded = placed(&a, &[(0, NodeId::fog(1)), (1, NodeId::fog(1)), (2, NodeId::fog(0))], &g);
        let v = check_constraints(&crowded, &a, &g, &rm);
        assert!(matches!(&v[..], [ConstraintViolation::Capacity { demand: 60, capacity: 50, .. }, ..]));
        // Duplicate assignment.
        let mut dup = placed(&a, &[(0, NodeId::fog(0)), (1, NodeId::fog(0)), (2, NodeId::fog(0))], &g);
        dup.assignments.push((TaskId(2), NodeId::CLOUD));
        let v = check_constraints(&dup, &a, &g, &rm);
        assert!(v.contains(&ConstraintViolation::MultiplyAssigned { task: TaskId(2) }));
    }

    #[test]
    fn mfc_flags_bad_path() {
        let g = pair();
        let rm = ResourceMatrix::new(&g);
        let a = app(vec![task(0, 1, 1, 1, 1), task(1, 1, 1, 1, 1)], vec![edge(0, 1, 100)], NodeId::fog(0));
        let mut p = placed(&a, &[(0, NodeId::fog(0)), (1, NodeId::fog(1))], &g);
        p.edge_paths.insert(
            EdgeKey { src: TaskId(0), dst: TaskId(1) },
            EdgeMapping::Mapped(PhysicalPath::empty(NodeId::fog(0))),
        );
        let v = check_constraints(&p, &a, &g, &rm);
        assert!(v.iter().any(|x| matches!(x, ConstraintViolation::Structural { .. })));
    }

    #[test]
    fn herafc_output_is_clean() {
        let g = pair();
        let rm = ResourceMatrix::new(&g);
        let mut e = edge(0, 1, 100);
        e.max_latency_ms = 10_000.0;
        let a = app(vec![task(0, 30, 1, 1, 1), task(1, 30, 1, 1, 1)], vec![e], NodeId::fog(1));
        let params = OrderParams::default();
        let q = order_tasks(&a, &g, &params).unwrap();
        let wv = critical_values(&a, &g, &params).unwrap();
        let p = herafc_place(&a, &g, &rm, &q, &wv).unwrap();
        assert_eq!(check_constraints(&p, &a, &g, &rm), vec![]);
    }

    #[test]
    fn single_fn_models_agree() {
        // One FN and the cloud; the FN is the home.
        let mut b = GraphBuilder::new();
        let i = b.add_fci();
        b.add_fn_linked(40, 1000, i, 300, 50.0);
        b.link(i, NodeId::CLOUD, 600, 150.0);
        b.cloud(400, 10_000);
        let g = b.build().unwrap();
        let rm = ResourceMatrix::new(&g);
        let a = app(vec![task(0, 1, 1, 1, 1), task(1, 1, 1, 1, 1)], vec![edge(0, 1, 100)], NodeId::fog(0));
        let p = placed(&a, &[(0, NodeId::fog(0)), (1, NodeId::CLOUD)], &g);
        let mfc = eval_mfc(&p, &a, &rm, &ObjectiveParams::default()).unwrap();
        let model = SingleFogModel::new(
            vec![
                Server { tier: ServerTier::Cloud, residual: 400.0, cpu: 400, mem_mb: 10_000 },
                Server { tier: ServerTier::Fog, residual: 40.0, cpu: 40, mem_mb: 1000 },
            ],
            vec![vec![0.0, 300.0], vec![300.0, 0.0]],
            vec![vec![0.0, 200.0], vec![200.0, 0.0]],
            0.5,
        );
        let inst = SingleFogInstance {
            tasks: vec![(1, 1), (1, 1)],
            edges: vec![(0, 1, 100.0, 1000.0)],
        };
        let sf = eval_single_fog(&vec![vec![1], vec![0]], &inst, &model).unwrap();
        assert!(close(mfc.edge_bandwidth_terms[0].1, sf.edge_bandwidth_terms[0].1));
        assert!(close(mfc.task_terms[0].1, sf.task_terms[0].1));
        assert!(close(mfc.task_terms[1].1, sf.task_terms[1].1));
    }

    proptest! {
        #[test]
        fn task_term_monotone_in_residual(cap in 2u64..10_000, used in 1u64..10_000) {
            prop_assume!(used < cap);
            let mut b = GraphBuilder::new();
            let i = b.add_fci();
            b.add_fn_linked(cap, 1000, i, 300, 50.0);
            b.link(i, NodeId::CLOUD, 600, 150.0);
            b.cloud(cap * 10, 10_000);
            let g = b.build().unwrap();
            let a = app(vec![task(0, 1, 1, 1, 1)], vec![], NodeId::fog(0));
            let p = placed(&a, &[(0, NodeId::fog(0))], &g);
            let fresh = ResourceMatrix::new(&g);
            let mut busy = fresh.clone();
            busy.debit(NodeId::fog(0), used, 0).unwrap();
            let x = eval_mfc(&p, &a, &fresh, &ObjectiveParams::default()).unwrap().total;
            let y = eval_mfc(&p, &a, &busy, &ObjectiveParams::default()).unwrap().total;
            prop_assert!(y > x);
        }
    }
}
