//! Minimum-latency path search under a bandwidth floor.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{LinkId, LinkView, NodeId, ResourceGraph, Tier};
use crate::error::TopologyError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalPath {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    pub total_latency_ms: f64,
    /// Smallest residual bandwidth along the path when it was found;
    /// `None` for a zero-length path.
    pub min_bandwidth_mbps: Option<u64>,
}

impl PhysicalPath {
    pub fn empty(at: NodeId) -> Self {
        PhysicalPath {
            nodes: vec![at],
            links: Vec::new(),
            total_latency_ms: 0.0,
            min_bandwidth_mbps: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Number of FCIs the path traverses.
    pub fn hop_count(&self) -> u32 {
        self.nodes.iter().filter(|n| n.tier() == Tier::Fci).count() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Label {
    latency: f64,
    links: u32,
    node: usize,
}

impl Eq for Label {}

impl Ord for Label {
    // Reversed so the max-heap pops the smallest label.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .latency
            .total_cmp(&self.latency)
            .then(other.links.cmp(&self.links))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ResourceGraph {
    /// Minimum-latency path between two hosting nodes that only uses links
    /// with at least `required_mbps` residual bandwidth in `view`.
    ///
    /// Intermediate nodes may be FCIs or the cloud, never a FN. Ties on
    /// latency go to fewer links, then to the lower predecessor index.
    pub fn shortest_path(
        &self,
        a: NodeId,
        b: NodeId,
        required_mbps: u64,
        view: &impl LinkView,
    ) -> Result<PhysicalPath, TopologyError> {
        for n in [a, b] {
            if !self.contains(n) {
                return Err(TopologyError::UnknownNode(n));
            }
            if !n.is_host() {
                return Err(TopologyError::NotAHost(n));
            }
        }
        if a == b {
            return Ok(PhysicalPath::empty(a));
        }
        let (src, dst) = (self.dense(a), self.dense(b));
        let n = self.node_count();
        let mut best: Vec<Option<(f64, u32)>> = vec![None; n];
        let mut pred: Vec<Option<(usize, LinkId)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        best[src] = Some((0.0, 0));
        heap.push(Label {
            latency: 0.0,
            links: 0,
            node: src,
        });

        while let Some(Label { latency, links, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if node == dst {
                break;
            }
            // FNs other than the source are endpoints only.
            if node != src && self.node_at(node).is_fog() {
                continue;
            }
            for &(next, link) in self.neighbors(node) {
                if done[next] || view.residual_bandwidth(link) < required_mbps {
                    continue;
                }
                let cand = (latency + view.latency(link), links + 1);
                let better = match best[next] {
                    None => true,
                    Some(cur) => match cand.0.total_cmp(&cur.0).then(cand.1.cmp(&cur.1)) {
                        Ordering::Less => true,
                        Ordering::Equal => pred[next].is_some_and(|(p, _)| node < p),
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best[next] = Some(cand);
                    pred[next] = Some((node, link));
                    heap.push(Label {
                        latency: cand.0,
                        links: cand.1,
                        node: next,
                    });
                }
            }
        }

        if !done[dst] {
            return Err(TopologyError::NoPath { a, b, required_mbps });
        }
        let mut nodes = vec![b];
        let mut links = Vec::new();
        let mut cur = dst;
        while let Some((p, l)) = pred[cur] {
            links.push(l);
            nodes.push(self.node_at(p));
            cur = p;
        }
        nodes.reverse();
        links.reverse();
        let total_latency_ms = links.iter().map(|&l| view.latency(l)).sum();
        let min_bandwidth_mbps = links.iter().map(|&l| view.residual_bandwidth(l)).min();
        Ok(PhysicalPath {
            nodes,
            links,
            total_latency_ms,
            min_bandwidth_mbps,
        })
    }
}
