use thiserror::Error;

use crate::topology::NodeId;
use crate::workload::{DagViolation, TaskId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid range for `{key}`: {detail}")]
    InvalidRange { key: &'static str, detail: String },
    #[error("invalid value for `{key}`: {detail}")]
    InvalidValue { key: &'static str, detail: String },
    #[error("infeasible configuration: {0}")]
    Constraint(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} is not a hosting node (FN or cloud)")]
    NotAHost(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("{a} and {b} are unreachable from each other")]
    Unreachable { a: NodeId, b: NodeId },
    #[error("no path with residual bandwidth >= {required_mbps} Mbps between {a} and {b}")]
    NoPath {
        a: NodeId,
        b: NodeId,
        required_mbps: u64,
    },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("malformed application document: {0}")]
    Parse(String),
    #[error("application failed validation: {}", format_violations(.0))]
    Invalid(Vec<DagViolation>),
    #[error("environment has no fog node to act as an application's home")]
    NoFogNodes,
    #[error("{apps} applications need at least {needed} tasks but max_total_tasks is {limit}")]
    TaskBudget { apps: u32, needed: u64, limit: u64 },
}

fn format_violations(v: &[DagViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderingError {
    #[error("application has no tasks")]
    EmptyApplication,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("maximum {resource} capacity is zero")]
    ZeroCapacity { resource: &'static str },
    #[error("task graph contains a cycle")]
    Cycle,
    #[error("task {0} has a non-positive {1}")]
    NonPositive(TaskId, &'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("resource matrix does not match the graph: {0}")]
    InconsistentMatrix(String),
    #[error("debit of {amount} {resource} on {node} exceeds residual {residual}")]
    Overdraft {
        node: NodeId,
        resource: &'static str,
        amount: u64,
        residual: u64,
    },
    #[error("release of {amount} {resource} on {node} exceeds the reserved {reserved}")]
    OverRelease {
        node: NodeId,
        resource: &'static str,
        amount: u64,
        reserved: u64,
    },
    #[error("process queue does not cover the application: {0}")]
    QueueMismatch(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("malformed placement document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("task {0} is not assigned")]
    UnassignedTask(TaskId),
    #[error("task {0} is assigned more than once")]
    MultiplyAssigned(TaskId),
    #[error("edge {0}->{1} is not mapped")]
    UnmappedEdge(TaskId, TaskId),
    #[error("server or node {0} has no residual {1} to score against")]
    ZeroResidual(String, &'static str),
    #[error("no link between servers {0} and {1}")]
    MissingLink(usize, usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {what} is {actual}, limit {limit}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error("invariant violated at t={time_ms} ms: {detail}")]
    Invariant { time_ms: u64, detail: String },
}
