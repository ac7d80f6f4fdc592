//! The MultiFog-Cloud resource graph: fog nodes, fog-cloud interfaces (FCIs)
//! and one aggregate cloud, joined by latency/bandwidth-weighted links.
//!
//! Hop distances count the FCIs a path passes through. Only FCIs act as
//! intermediate hops for that count; the cloud and FNs are endpoints.

mod generate;
mod path;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TopologyError;

pub use generate::build_graph;
pub use path::PhysicalPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Fog,
    Fci,
    Cloud,
}

/// Node identifier: tier tag plus an index local to that tier.
///
/// Ordering is by tier first (fog < FCI < cloud) and then by index, which is
/// the tie-break order used throughout placement.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    tier: Tier,
    index: u32,
}

impl NodeId {
    pub const CLOUD: NodeId = NodeId {
        tier: Tier::Cloud,
        index: 0,
    };

    pub const fn fog(index: u32) -> Self {
        NodeId {
            tier: Tier::Fog,
            index,
        }
    }

    pub const fn fci(index: u32) -> Self {
        NodeId {
            tier: Tier::Fci,
            index,
        }
    }

    pub fn tier(self) -> Tier {
        self.tier
    }

    pub fn index(self) -> u32 {
        self.index
    }

    /// FNs and the cloud can host tasks; FCIs only forward traffic.
    pub fn is_host(self) -> bool {
        self.tier != Tier::Fci
    }

    pub fn is_fog(self) -> bool {
        self.tier == Tier::Fog
    }

    pub fn is_cloud(self) -> bool {
        self.tier == Tier::Cloud
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tier {
            Tier::Fog => write!(f, "F{}", self.index),
            Tier::Fci => write!(f, "I{}", self.index),
            Tier::Cloud => f.write_str("C"),
        }
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "C" {
            return Ok(NodeId::CLOUD);
        }
        let (tier, rest) = match s.split_at_checked(1) {
            Some(("F", rest)) => (Tier::Fog, rest),
            Some(("I", rest)) => (Tier::Fci, rest),
            _ => return Err(format!("bad node id `{s}`")),
        };
        let index = rest
            .parse::<u32>()
            .map_err(|_| format!("bad node id `{s}`"))?;
        Ok(NodeId { tier, index })
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogNode {
    pub id: NodeId,
    pub cpu: u64,
    pub mem_mb: u64,
    pub mips: u32,
    pub fci: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudNode {
    pub cpu: u64,
    pub mem_mb: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub bandwidth_mbps: u64,
    pub latency_ms: f64,
}

impl Link {
    pub fn class(&self) -> LinkClass {
        match (self.a.tier(), self.b.tier()) {
            (Tier::Fog, Tier::Fci) | (Tier::Fci, Tier::Fog) => LinkClass::FogFci,
            (Tier::Fci, Tier::Fci) => LinkClass::FciFci,
            (Tier::Fci, Tier::Cloud) | (Tier::Cloud, Tier::Fci) => LinkClass::FciCloud,
            _ => LinkClass::FogCloud,
        }
    }

    pub fn other(&self, end: NodeId) -> NodeId {
        if self.a == end {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkClass {
    FogFci,
    FciFci,
    FciCloud,
    FogCloud,
}

impl LinkClass {
    /// Links that belong to the fog tier for utilization accounting.
    pub fn is_fog_side(self) -> bool {
        matches!(self, LinkClass::FogFci | LinkClass::FciFci)
    }
}

/// Per-link state a path search reads: residual bandwidth and current latency.
pub trait LinkView {
    fn residual_bandwidth(&self, link: LinkId) -> u64;
    fn latency(&self, link: LinkId) -> f64;
}

/// Serializable form of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub fci_count: u32,
    pub fns: Vec<FogNode>,
    pub cloud: CloudNode,
    pub links: Vec<Link>,
    pub max_hops: u32,
}

const UNREACHABLE: u32 = u32::MAX;

/// Immutable resource graph with precomputed hop tables.
#[derive(Debug, Clone)]
pub struct ResourceGraph {
    fns: Vec<FogNode>,
    fci_count: u32,
    cloud: CloudNode,
    links: Vec<Link>,
    max_hops: u32,
    adjacency: Vec<Vec<(usize, LinkId)>>,
    link_lookup: HashMap<(usize, usize), LinkId>,
    fns_by_fci: Vec<Vec<NodeId>>,
    fci_dist: Vec<Vec<u32>>,
    fci_cloud_dist: Vec<u32>,
    fn_direct_cloud: Vec<bool>,
}

impl ResourceGraph {
    pub fn fog_nodes(&self) -> &[FogNode] {
        &self.fns
    }

    pub fn fog_node(&self, id: NodeId) -> Option<&FogNode> {
        if id.is_fog() {
            self.fns.get(id.index() as usize)
        } else {
            None
        }
    }

    pub fn fci_count(&self) -> u32 {
        self.fci_count
    }

    pub fn fcis(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.fci_count).map(NodeId::fci)
    }

    pub fn cloud(&self) -> &CloudNode {
        &self.cloud
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0 as usize]
    }

    pub fn max_hops(&self) -> u32 {
        self.max_hops
    }

    pub fn node_count(&self) -> usize {
        self.fns.len() + self.fci_count as usize + 1
    }

    /// All hosting nodes: FNs in id order, then the cloud.
    pub fn hosts(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.fns.iter().map(|f| f.id).chain(std::iter::once(NodeId::CLOUD))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        match id.tier() {
            Tier::Fog => (id.index() as usize) < self.fns.len(),
            Tier::Fci => id.index() < self.fci_count,
            Tier::Cloud => id.index() == 0,
        }
    }

    /// Dense index used by per-node arrays: FNs, then FCIs, then the cloud.
    pub fn dense(&self, id: NodeId) -> usize {
        match id.tier() {
            Tier::Fog => id.index() as usize,
            Tier::Fci => self.fns.len() + id.index() as usize,
            Tier::Cloud => self.fns.len() + self.fci_count as usize,
        }
    }

    pub fn node_at(&self, dense: usize) -> NodeId {
        let n_fn = self.fns.len();
        let n_fci = self.fci_count as usize;
        if dense < n_fn {
            NodeId::fog(dense as u32)
        } else if dense < n_fn + n_fci {
            NodeId::fci((dense - n_fn) as u32)
        } else {
            NodeId::CLOUD
        }
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        let (x, y) = (self.dense(a), self.dense(b));
        self.link_lookup.get(&(x.min(y), x.max(y))).copied()
    }

    pub(crate) fn neighbors(&self, dense: usize) -> &[(usize, LinkId)] {
        &self.adjacency[dense]
    }

    /// Nominal CPU capacity of a hosting node (zero for FCIs).
    pub fn cpu_capacity(&self, id: NodeId) -> u64 {
        match id.tier() {
            Tier::Fog => self.fns[id.index() as usize].cpu,
            Tier::Cloud => self.cloud.cpu,
            Tier::Fci => 0,
        }
    }

    pub fn mem_capacity(&self, id: NodeId) -> u64 {
        match id.tier() {
            Tier::Fog => self.fns[id.index() as usize].mem_mb,
            Tier::Cloud => self.cloud.mem_mb,
            Tier::Fci => 0,
        }
    }

    pub fn fns_under(&self, fci: NodeId) -> &[NodeId] {
        &self.fns_by_fci[fci.index() as usize]
    }

    /// Minimum number of FCIs on any path between two hosting nodes.
    pub fn hop_distance(&self, a: NodeId, b: NodeId) -> Result<u32, TopologyError> {
        for n in [a, b] {
            if !self.contains(n) {
                return Err(TopologyError::UnknownNode(n));
            }
            if !n.is_host() {
                return Err(TopologyError::NotAHost(n));
            }
        }
        self.raw_hops(a, b)
            .ok_or(TopologyError::Unreachable { a, b })
    }

    fn raw_hops(&self, a: NodeId, b: NodeId) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        let d = match (a.tier(), b.tier()) {
            (Tier::Fog, Tier::Fog) => {
                let fa = self.fns[a.index() as usize].fci.index() as usize;
                let fb = self.fns[b.index() as usize].fci.index() as usize;
                self.fci_dist[fa][fb]
            }
            (Tier::Fog, Tier::Cloud) | (Tier::Cloud, Tier::Fog) => {
                let f = if a.is_fog() { a } else { b };
                if self.fn_direct_cloud[f.index() as usize] {
                    // A direct FN-cloud link counts as one interface hop.
                    return Some(1);
                }
                self.fci_cloud_dist[self.fns[f.index() as usize].fci.index() as usize]
            }
            _ => UNREACHABLE,
        };
        (d != UNREACHABLE).then(|| d + 1)
    }

    /// Hosting nodes within `h` hops of any origin, origins excluded.
    pub fn nodes_within_hops(&self, origins: &[NodeId], h: u32) -> BTreeSet<NodeId> {
        self.candidates_within(origins, h)
            .into_iter()
            .map(|(n, _)| n)
            .collect()
    }

    /// Like [`nodes_within_hops`](Self::nodes_within_hops) but ordered by
    /// (hop distance from the origin set, node id); the cloud sorts last
    /// within its hop class.
    pub fn candidates_within(&self, origins: &[NodeId], h: u32) -> Vec<(NodeId, u32)> {
        let mut out: Vec<(NodeId, u32)> = self
            .hosts()
            .filter(|n| !origins.contains(n))
            .filter_map(|n| {
                origins
                    .iter()
                    .filter_map(|&o| self.raw_hops(o, n))
                    .min()
                    .filter(|&d| d <= h)
                    .map(|d| (n, d))
            })
            .collect();
        out.sort_by_key(|&(n, d)| (d, n));
        out
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            fci_count: self.fci_count,
            fns: self.fns.clone(),
            cloud: self.cloud.clone(),
            links: self.links.clone(),
            max_hops: self.max_hops,
        }
    }

    pub fn from_doc(doc: GraphDoc) -> Result<Self, TopologyError> {
        let mut b = GraphBuilder::new();
        for _ in 0..doc.fci_count {
            b.add_fci();
        }
        for f in &doc.fns {
            if f.id != NodeId::fog(b.fns.len() as u32) {
                return Err(TopologyError::Invalid(format!(
                    "fog node {} listed out of order",
                    f.id
                )));
            }
            b.add_fn(f.cpu, f.mem_mb, f.mips, f.fci);
        }
        b.cloud(doc.cloud.cpu, doc.cloud.mem_mb);
        for l in doc.links {
            b.link(l.a, l.b, l.bandwidth_mbps, l.latency_ms);
        }
        b.max_hops(doc.max_hops);
        b.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("graph serializes")
    }
}

impl LinkView for ResourceGraph {
    fn residual_bandwidth(&self, link: LinkId) -> u64 {
        self.link(link).bandwidth_mbps
    }

    fn latency(&self, link: LinkId) -> f64 {
        self.link(link).latency_ms
    }
}

/// Incremental constructor that validates every graph invariant in `build`.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    fci_count: u32,
    fns: Vec<FogNode>,
    cloud: Option<CloudNode>,
    links: Vec<Link>,
    max_hops: Option<u32>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_fci(&mut self) -> NodeId {
        self.fci_count += 1;
        NodeId::fci(self.fci_count - 1)
    }

    pub fn add_fn(&mut self, cpu: u64, mem_mb: u64, mips: u32, fci: NodeId) -> NodeId {
        let id = NodeId::fog(self.fns.len() as u32);
        self.fns.push(FogNode {
            id,
            cpu,
            mem_mb,
            mips,
            fci,
        });
        id
    }

    /// Add a FN together with its FCI uplink.
    pub fn add_fn_linked(
        &mut self,
        cpu: u64,
        mem_mb: u64,
        fci: NodeId,
        bandwidth_mbps: u64,
        latency_ms: f64,
    ) -> NodeId {
        let id = self.add_fn(cpu, mem_mb, 0, fci);
        self.link(id, fci, bandwidth_mbps, latency_ms);
        id
    }

    pub fn cloud(&mut self, cpu: u64, mem_mb: u64) -> &mut Self {
        self.cloud = Some(CloudNode { cpu, mem_mb });
        self
    }

    pub fn link(&mut self, a: NodeId, b: NodeId, bandwidth_mbps: u64, latency_ms: f64) -> &mut Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.links.push(Link {
            a,
            b,
            bandwidth_mbps,
            latency_ms,
        });
        self
    }

    pub fn max_hops(&mut self, h: u32) -> &mut Self {
        self.max_hops = Some(h);
        self
    }

    pub fn fn_count(&self) -> usize {
        self.fns.len()
    }

    pub fn build(self) -> Result<ResourceGraph, TopologyError> {
        let invalid = |msg: String| Err(TopologyError::Invalid(msg));
        let n_fn = self.fns.len();
        let n_fci = self.fci_count as usize;
        let cloud = match self.cloud {
            Some(c) => c,
            None => return invalid("graph has no cloud".into()),
        };
        let fog_cpu: u64 = self.fns.iter().map(|f| f.cpu).sum();
        let fog_mem: u64 = self.fns.iter().map(|f| f.mem_mb).sum();
        if cloud.cpu < fog_cpu || cloud.mem_mb < fog_mem {
            return invalid(format!(
                "cloud capacity ({} cpu, {} MB) is below the summed fog capacity ({fog_cpu} cpu, {fog_mem} MB)",
                cloud.cpu, cloud.mem_mb
            ));
        }
        for f in &self.fns {
            if f.cpu == 0 || f.mem_mb == 0 {
                return invalid(format!("fog node {} has zero capacity", f.id));
            }
            if f.fci.tier() != Tier::Fci || f.fci.index() >= self.fci_count {
                return invalid(format!("fog node {} attached to non-FCI {}", f.id, f.fci));
            }
        }

        let dense = |id: NodeId| -> usize {
            match id.tier() {
                Tier::Fog => id.index() as usize,
                Tier::Fci => n_fn + id.index() as usize,
                Tier::Cloud => n_fn + n_fci,
            }
        };
        let contains = |id: NodeId| match id.tier() {
            Tier::Fog => (id.index() as usize) < n_fn,
            Tier::Fci => (id.index() as usize) < n_fci,
            Tier::Cloud => id.index() == 0,
        };

        let node_count = n_fn + n_fci + 1;
        let mut adjacency = vec![Vec::new(); node_count];
        let mut link_lookup = HashMap::new();
        let mut fn_uplinks = vec![0usize; n_fn];
        let mut fn_direct_cloud = vec![false; n_fn];
        let mut fci_adj: Vec<Vec<usize>> = vec![Vec::new(); n_fci];
        let mut cloud_linked = vec![false; n_fci];
        let mut max_fog_fci = f64::NEG_INFINITY;
        let mut min_other = f64::INFINITY;

        for (i, l) in self.links.iter().enumerate() {
            if !contains(l.a) || !contains(l.b) {
                return invalid(format!("link {}-{} references an unknown node", l.a, l.b));
            }
            if l.a == l.b {
                return invalid(format!("self link on {}", l.a));
            }
            if l.bandwidth_mbps == 0 || !(l.latency_ms > 0.0) || !l.latency_ms.is_finite() {
                return invalid(format!("link {}-{} needs positive bandwidth and latency", l.a, l.b));
            }
            let (x, y) = (dense(l.a), dense(l.b));
            let key = (x.min(y), x.max(y));
            let id = LinkId(i as u32);
            if link_lookup.insert(key, id).is_some() {
                return invalid(format!("duplicate link {}-{}", l.a, l.b));
            }
            match l.class() {
                LinkClass::FogFci => {
                    let (f, i) = if l.a.is_fog() { (l.a, l.b) } else { (l.b, l.a) };
                    if self.fns[f.index() as usize].fci != i {
                        return invalid(format!("{f} linked to {i} but attached to another FCI"));
                    }
                    fn_uplinks[f.index() as usize] += 1;
                    max_fog_fci = max_fog_fci.max(l.latency_ms);
                }
                LinkClass::FciFci => {
                    let (p, q) = (l.a.index() as usize, l.b.index() as usize);
                    fci_adj[p].push(q);
                    fci_adj[q].push(p);
                    min_other = min_other.min(l.latency_ms);
                }
                LinkClass::FciCloud => {
                    let i = if l.a.tier() == Tier::Fci { l.a } else { l.b };
                    cloud_linked[i.index() as usize] = true;
                    min_other = min_other.min(l.latency_ms);
                }
                LinkClass::FogCloud => {
                    if !(l.a.is_cloud() || l.b.is_cloud()) {
                        return invalid(format!("fog nodes {} and {} cannot link directly", l.a, l.b));
                    }
                    let f = if l.a.is_fog() { l.a } else { l.b };
                    fn_direct_cloud[f.index() as usize] = true;
                    min_other = min_other.min(l.latency_ms);
                }
            }
            adjacency[x].push((y, id));
            adjacency[y].push((x, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        if let Some(f) = fn_uplinks.iter().position(|&c| c != 1) {
            return invalid(format!(
                "fog node F{f} must have exactly one FCI uplink, found {}",
                fn_uplinks[f]
            ));
        }
        if max_fog_fci >= min_other {
            return invalid(format!(
                "latency ordering violated: slowest FN-FCI link {max_fog_fci} ms is not below \
                 the fastest other link {min_other} ms"
            ));
        }

        // Connectivity over all links.
        let mut seen = vec![false; node_count];
        let mut queue = VecDeque::from([node_count - 1]);
        seen[node_count - 1] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            let id = match u {
                u if u < n_fn => NodeId::fog(u as u32),
                u => NodeId::fci((u - n_fn) as u32),
            };
            return invalid(format!("node {id} is disconnected from the cloud"));
        }

        let mut fns_by_fci = vec![Vec::new(); n_fci];
        for f in &self.fns {
            fns_by_fci[f.fci.index() as usize].push(f.id);
        }

        let fci_dist: Vec<Vec<u32>> = (0..n_fci).map(|s| bfs(&fci_adj, s)).collect();
        let fci_cloud_dist = (0..n_fci)
            .map(|f| {
                (0..n_fci)
                    .filter(|&c| cloud_linked[c])
                    .map(|c| fci_dist[f][c])
                    .min()
                    .unwrap_or(UNREACHABLE)
            })
            .collect();

        Ok(ResourceGraph {
            fns: self.fns,
            fci_count: self.fci_count,
            cloud,
            links: self.links,
            max_hops: self.max_hops.unwrap_or(2),
            adjacency,
            link_lookup,
            fns_by_fci,
            fci_dist,
            fci_cloud_dist,
            fn_direct_cloud,
        })
    }
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == UNREACHABLE {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}
