//! Residual resource bookkeeping for nodes and links.

use crate::error::PlacementError;
use crate::topology::{LinkId, LinkView, NodeId, ResourceGraph};

/// Available and reserved CPU/memory per node and bandwidth per link.
///
/// "Available" starts at nominal capacity and only moves under resource
/// fluctuation; residual = available − reserved and is never negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceMatrix {
    n_fn: usize,
    n_fci: usize,
    avail_cpu: Vec<u64>,
    avail_mem: Vec<u64>,
    held_cpu: Vec<u64>,
    held_mem: Vec<u64>,
    avail_bw: Vec<u64>,
    held_bw: Vec<u64>,
    latency: Vec<f64>,
}

impl ResourceMatrix {
    pub fn new(graph: &ResourceGraph) -> Self {
        let n = graph.node_count();
        let cpu = (0..n).map(|d| graph.cpu_capacity(graph.node_at(d))).collect();
        let mem = (0..n).map(|d| graph.mem_capacity(graph.node_at(d))).collect();
        ResourceMatrix {
            n_fn: graph.fog_nodes().len(),
            n_fci: graph.fci_count() as usize,
            avail_cpu: cpu,
            avail_mem: mem,
            held_cpu: vec![0; n],
            held_mem: vec![0; n],
            avail_bw: graph.links().iter().map(|l| l.bandwidth_mbps).collect(),
            held_bw: vec![0; graph.links().len()],
            latency: graph.links().iter().map(|l| l.latency_ms).collect(),
        }
    }

    fn dense(&self, node: NodeId) -> usize {
        if node.is_fog() {
            node.index() as usize
        } else if node.is_cloud() {
            self.n_fn + self.n_fci
        } else {
            self.n_fn + node.index() as usize
        }
    }

    /// Shape and bounds check against `graph`.
    pub fn check_consistent(&self, graph: &ResourceGraph) -> Result<(), PlacementError> {
        let bad = |m: String| Err(PlacementError::InconsistentMatrix(m));
        if self.avail_cpu.len() != graph.node_count()
            || self.n_fn != graph.fog_nodes().len()
            || self.avail_bw.len() != graph.links().len()
        {
            return bad("dimensions differ from the graph".into());
        }
        for d in 0..self.avail_cpu.len() {
            let node = graph.node_at(d);
            if self.avail_cpu[d] > graph.cpu_capacity(node) || self.avail_mem[d] > graph.mem_capacity(node) {
                return bad(format!("{node} availability exceeds capacity"));
            }
            if self.held_cpu[d] > self.avail_cpu[d] || self.held_mem[d] > self.avail_mem[d] {
                return bad(format!("{node} reservations exceed availability"));
            }
        }
        for (i, l) in graph.links().iter().enumerate() {
            if self.avail_bw[i] > l.bandwidth_mbps || self.held_bw[i] > self.avail_bw[i] {
                return bad(format!("link {}-{} bandwidth out of bounds", l.a, l.b));
            }
        }
        Ok(())
    }

    pub fn residual_cpu(&self, node: NodeId) -> u64 {
        let d = self.dense(node);
        self.avail_cpu[d] - self.held_cpu[d]
    }

    pub fn residual_mem(&self, node: NodeId) -> u64 {
        let d = self.dense(node);
        self.avail_mem[d] - self.held_mem[d]
    }

    pub fn reserved_cpu(&self, node: NodeId) -> u64 {
        self.held_cpu[self.dense(node)]
    }

    pub fn reserved_mem(&self, node: NodeId) -> u64 {
        self.held_mem[self.dense(node)]
    }

    pub fn available_cpu(&self, node: NodeId) -> u64 {
        self.avail_cpu[self.dense(node)]
    }

    pub fn available_mem(&self, node: NodeId) -> u64 {
        self.avail_mem[self.dense(node)]
    }

    pub fn fits(&self, node: NodeId, cpu: u64, mem_mb: u64) -> bool {
        self.residual_cpu(node) >= cpu && self.residual_mem(node) >= mem_mb
    }

    pub fn debit(&mut self, node: NodeId, cpu: u64, mem_mb: u64) -> Result<(), PlacementError> {
        let (rc, rm) = (self.residual_cpu(node), self.residual_mem(node));
        if cpu > rc {
            return Err(PlacementError::Overdraft {
                node,
                resource: "cpu",
                amount: cpu,
                residual: rc,
            });
        }
        if mem_mb > rm {
            return Err(PlacementError::Overdraft {
                node,
                resource: "memory",
                amount: mem_mb,
                residual: rm,
            });
        }
        let d = self.dense(node);
        self.held_cpu[d] += cpu;
        self.held_mem[d] += mem_mb;
        Ok(())
    }

    pub fn credit(&mut self, node: NodeId, cpu: u64, mem_mb: u64) -> Result<(), PlacementError> {
        let d = self.dense(node);
        if cpu > self.held_cpu[d] {
            return Err(PlacementError::OverRelease {
                node,
                resource: "cpu",
                amount: cpu,
                reserved: self.held_cpu[d],
            });
        }
        if mem_mb > self.held_mem[d] {
            return Err(PlacementError::OverRelease {
                node,
                resource: "memory",
                amount: mem_mb,
                reserved: self.held_mem[d],
            });
        }
        self.held_cpu[d] -= cpu;
        self.held_mem[d] -= mem_mb;
        Ok(())
    }

    pub fn reserved_bandwidth(&self, link: LinkId) -> u64 {
        self.held_bw[link.0 as usize]
    }

    pub fn available_bandwidth(&self, link: LinkId) -> u64 {
        self.avail_bw[link.0 as usize]
    }

    pub fn debit_bandwidth(&mut self, link: LinkId, mbps: u64, graph: &ResourceGraph) -> Result<(), PlacementError> {
        let residual = self.residual_bandwidth(link);
        if mbps > residual {
            let l = graph.link(link);
            return Err(PlacementError::Overdraft {
                node: l.a,
                resource: "bandwidth",
                amount: mbps,
                residual,
            });
        }
        self.held_bw[link.0 as usize] += mbps;
        Ok(())
    }

    pub fn credit_bandwidth(&mut self, link: LinkId, mbps: u64, graph: &ResourceGraph) -> Result<(), PlacementError> {
        let held = self.held_bw[link.0 as usize];
        if mbps > held {
            return Err(PlacementError::OverRelease {
                node: graph.link(link).a,
                resource: "bandwidth",
                amount: mbps,
                reserved: held,
            });
        }
        self.held_bw[link.0 as usize] -= mbps;
        Ok(())
    }

    /// Set availability to `target`, raised to the reserved amount when the
    /// target would revoke a reservation. Returns true when clamped.
    pub fn set_available(&mut self, node: NodeId, cpu: u64, mem_mb: u64) -> bool {
        let d = self.dense(node);
        let clamped = cpu < self.held_cpu[d] || mem_mb < self.held_mem[d];
        self.avail_cpu[d] = cpu.max(self.held_cpu[d]);
        self.avail_mem[d] = mem_mb.max(self.held_mem[d]);
        clamped
    }

    pub fn set_link_available(&mut self, link: LinkId, mbps: u64) -> bool {
        let i = link.0 as usize;
        let clamped = mbps < self.held_bw[i];
        self.avail_bw[i] = mbps.max(self.held_bw[i]);
        clamped
    }

    pub fn set_latency(&mut self, link: LinkId, ms: f64) {
        self.latency[link.0 as usize] = ms;
    }

    pub fn reset_to(&mut self, snapshot: &ResourceMatrix) {
        self.clone_from(snapshot);
    }
}

impl LinkView for ResourceMatrix {
    fn residual_bandwidth(&self, link: LinkId) -> u64 {
        let i = link.0 as usize;
        self.avail_bw[i] - self.held_bw[i]
    }

    fn latency(&self, link: LinkId) -> f64 {
        self.latency[link.0 as usize]
    }
}
