//! Exhaustive placement search for small instances.
//!
//! Every task→host assignment is enumerated in lexicographic order over
//! `[F0, F1, …, C]`. Edges are mapped independently on their shortest
//! bandwidth-feasible path; an assignment whose routes together overload a
//! link is rejected rather than rerouted.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{OracleError, TopologyError};
use crate::objective::{check_constraints, eval_mfc, ConstraintViolation, ObjectiveParams};
use crate::ordering::task_levels;
use crate::placement::{EdgeKey, EdgeMapping, Placement, ResourceMatrix};
use crate::topology::{NodeId, ResourceGraph};
use crate::workload::Application;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleLimits {
    pub max_tasks: usize,
    /// Bound on `|FN| + 1`.
    pub max_nodes: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_tasks: 6,
            max_nodes: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Option<Placement>,
    pub best_score: Option<f64>,
    pub enumerated_count: u64,
    pub feasible_count: u64,
    pub heuristic_gap: Option<f64>,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.best.is_some()
    }

    /// JSON form; `best_placement` is the string `"infeasible"` when no
    /// assignment passes.
    pub fn to_json_value(&self) -> serde_json::Value {
        let best = match &self.best {
            Some(p) => serde_json::to_value(p.to_doc()).expect("placement serializes"),
            None => serde_json::Value::from("infeasible"),
        };
        serde_json::json!({
            "feasible": self.is_feasible(),
            "best_placement": best,
            "best_score": self.best_score,
            "enumerated_count": self.enumerated_count,
            "feasible_count": self.feasible_count,
            "heuristic_gap": self.heuristic_gap,
        })
    }
}

/// Whether a heuristic placement counts as a successful, constraint-clean
/// placement. Latency overruns are reported, not disqualifying.
pub fn placement_feasible(placement: &Placement, app: &Application, graph: &ResourceGraph, rm: &ResourceMatrix) -> bool {
    placement.rejected.is_empty()
        && check_constraints(placement, app, graph, rm)
            .iter()
            .all(|v| matches!(v, ConstraintViolation::Latency { .. }))
}

pub fn check_limits(app: &Application, graph: &ResourceGraph, limits: &OracleLimits) -> Result<(), OracleError> {
    if app.tasks.len() > limits.max_tasks {
        return Err(OracleError::TooLarge {
            what: "task count",
            actual: app.tasks.len(),
            limit: limits.max_tasks,
        });
    }
    let nodes = graph.fog_nodes().len() + 1;
    if nodes > limits.max_nodes {
        return Err(OracleError::TooLarge {
            what: "fog node count + 1",
            actual: nodes,
            limit: limits.max_nodes,
        });
    }
    Ok(())
}

/// Minimum-score feasible placement of `app` against residuals `rm`.
pub fn exhaustive_place(
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    limits: &OracleLimits,
    params: &ObjectiveParams,
) -> Result<OracleResult, OracleError> {
    check_limits(app, graph, limits)?;
    rm.check_consistent(graph)?;
    params.validate()?;
    let levels = task_levels(app)?;
    let hosts: Vec<NodeId> = graph.hosts().collect();
    let n = app.tasks.len();
    let depth = levels.iter().max().map_or(0, |m| m + 1);
    // The home FN requirement only binds if some task could sit there.
    let home_required = app.tasks.iter().any(|t| rm.fits(app.home_fn, t.cpu, t.mem_mb));

    // Shortest paths per ordered host pair and demand are reused across
    // assignments.
    let mut path_cache: BTreeMap<(NodeId, NodeId, u64), Option<crate::topology::PhysicalPath>> = BTreeMap::new();

    let mut digits = vec![0usize; n];
    let mut best: Option<(f64, Placement)> = None;
    let mut enumerated = 0u64;
    let mut feasible = 0u64;
    loop {
        enumerated += 1;
        let found = candidate(app, graph, rm, &hosts, &digits, &levels, depth, home_required, &mut path_cache)?;
        // Joint link load is only known once every edge has a route.
        if let Some(p) = found.filter(|p| placement_feasible(p, app, graph, rm)) {
            feasible += 1;
            let score = eval_mfc(&p, app, rm, params)?.total;
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, p));
            }
        }
        // Odometer increment, last task fastest.
        let mut i = n;
        loop {
            if i == 0 {
                let (best_score, best) = match best {
                    Some((s, p)) => (Some(s), Some(p)),
                    None => (None, None),
                };
                return Ok(OracleResult {
                    best,
                    best_score,
                    enumerated_count: enumerated,
                    feasible_count: feasible,
                    heuristic_gap: None,
                });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < hosts.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn candidate(
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    hosts: &[NodeId],
    digits: &[usize],
    levels: &[usize],
    depth: usize,
    home_required: bool,
    cache: &mut BTreeMap<(NodeId, NodeId, u64), Option<crate::topology::PhysicalPath>>,
) -> Result<Option<Placement>, OracleError> {
    let loc = |i: usize| hosts[digits[i]];
    if home_required && !(0..app.tasks.len()).any(|i| loc(i) == app.home_fn) {
        return Ok(None);
    }
    for level in 0..depth {
        let mut load: BTreeMap<NodeId, (u64, u64)> = BTreeMap::new();
        for (i, t) in app.tasks.iter().enumerate() {
            if levels[i] == level {
                let e = load.entry(loc(i)).or_default();
                e.0 += t.cpu;
                e.1 += t.mem_mb;
            }
        }
        if load.iter().any(|(&n, &(c, m))| c > rm.residual_cpu(n) || m > rm.residual_mem(n)) {
            return Ok(None);
        }
    }
    let index = app.task_index();
    let mut p = Placement::empty(app);
    p.home_fn_unavailable = !home_required;
    p.assignments = app.tasks.iter().enumerate().map(|(i, t)| (t.id, loc(i))).collect();
    for e in &app.edges {
        let (a, b) = (loc(index[&e.src]), loc(index[&e.dst]));
        let key = (a, b, e.bandwidth_mbps);
        let path = match cache.get(&key) {
            Some(p) => p.clone(),
            None => {
                let found = match graph.shortest_path(a, b, e.bandwidth_mbps, rm) {
                    Ok(path) => Some(path),
                    Err(TopologyError::NoPath { .. }) => None,
                    Err(other) => return Err(crate::error::PlacementError::from(other).into()),
                };
                cache.insert(key, found.clone());
                found
            }
        };
        match path {
            Some(path) => {
                p.edge_paths.insert(EdgeKey { src: e.src, dst: e.dst }, EdgeMapping::Mapped(path));
            }
            None => return Ok(None),
        }
    }
    Ok(Some(p))
}

/// Ratio of the heuristic's score to the oracle optimum when both are
/// feasible.
pub fn heuristic_gap(
    result: &OracleResult,
    heuristic: &Placement,
    app: &Application,
    graph: &ResourceGraph,
    rm: &ResourceMatrix,
    params: &ObjectiveParams,
) -> Result<Option<f64>, OracleError> {
    let Some(best) = result.best_score else {
        return Ok(None);
    };
    if !placement_feasible(heuristic, app, graph, rm) {
        return Ok(None);
    }
    let z = eval_mfc(heuristic, app, rm, params)?.total;
    Ok(Some(z / best))
}
