//! Seeded random topology generation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GraphBuilder, NodeId, ResourceGraph};
use crate::config::{EnvConfig, Span};
use crate::error::TopologyError;
use crate::rng::{stream_rng, Stream};

fn draw_u64(rng: &mut ChaCha8Rng, s: Span<u64>) -> u64 {
    rng.gen_range(s.min..=s.max)
}

fn draw_f64(rng: &mut ChaCha8Rng, s: Span<f64>) -> f64 {
    if s.min == s.max {
        s.min
    } else {
        rng.gen_range(s.min..=s.max)
    }
}

/// Generate a random MultiFog-Cloud graph from `cfg`.
///
/// Every FCI serves at least one FN and is linked to the cloud; FCI pairs
/// are linked with `fci_link_probability`. The same `(cfg, seed)` always
/// produces the same graph.
pub fn build_graph(cfg: &EnvConfig, seed: u64) -> Result<ResourceGraph, TopologyError> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, Stream::Topology);
    let n_fn = cfg.fn_count as usize;
    let n_fci = cfg.fci_count as usize;

    let mut b = GraphBuilder::new();
    let fcis: Vec<NodeId> = (0..n_fci).map(|_| b.add_fci()).collect();

    // First n_fci slots cover each FCI once, the rest are uniform; the
    // shuffle spreads the guaranteed slots over FN ids.
    let mut attach: Vec<usize> = (0..n_fn)
        .map(|i| if i < n_fci { i } else { rng.gen_range(0..n_fci) })
        .collect();
    attach.shuffle(&mut rng);

    let mut fog_cpu = 0u64;
    let mut fog_mem = 0u64;
    for &fci in &attach {
        let cpu = draw_u64(&mut rng, cfg.fn_cpu);
        let mem = draw_u64(&mut rng, cfg.fn_mem_mb);
        let mips = rng.gen_range(cfg.fn_mips.min..=cfg.fn_mips.max);
        let bw = draw_u64(&mut rng, cfg.fn_fci_bandwidth_mbps);
        let lat = draw_f64(&mut rng, cfg.fn_fci_latency_ms);
        let id = b.add_fn(cpu, mem, mips, fcis[fci]);
        b.link(id, fcis[fci], bw, lat);
        fog_cpu += cpu;
        fog_mem += mem;
    }

    for i in 0..n_fci {
        for j in (i + 1)..n_fci {
            if rng.gen_bool(cfg.fci_link_probability) {
                let bw = draw_u64(&mut rng, cfg.fci_fci_bandwidth_mbps);
                let lat = draw_f64(&mut rng, cfg.fci_fci_latency_ms);
                b.link(fcis[i], fcis[j], bw, lat);
            }
        }
    }
    for &fci in &fcis {
        let bw = draw_u64(&mut rng, cfg.fci_cloud_bandwidth_mbps);
        let lat = draw_f64(&mut rng, cfg.fci_cloud_latency_ms);
        b.link(fci, NodeId::CLOUD, bw, lat);
    }
    if cfg.fn_cloud_link_probability > 0.0 {
        for i in 0..n_fn {
            if rng.gen_bool(cfg.fn_cloud_link_probability) {
                let bw = draw_u64(&mut rng, cfg.fn_cloud_bandwidth_mbps);
                let lat = draw_f64(&mut rng, cfg.fn_cloud_latency_ms);
                b.link(NodeId::fog(i as u32), NodeId::CLOUD, bw, lat);
            }
        }
    }

    let scaled = |sum: u64| ((sum as f64) * cfg.cloud_capacity_factor).ceil() as u64;
    let cloud_cpu = cfg.cloud_cpu.unwrap_or_else(|| scaled(fog_cpu).max(1));
    let cloud_mem = cfg.cloud_mem_mb.unwrap_or_else(|| scaled(fog_mem).max(1));
    b.cloud(cloud_cpu, cloud_mem);
    b.max_hops(cfg.max_hops);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{LinkClass, Tier};

    fn small() -> EnvConfig {
        EnvConfig {
            fn_count: 40,
            fci_count: 12,
            ..EnvConfig::default()
        }
    }

    #[test]
    fn counts_and_ranges() {
        let cfg = EnvConfig::default();
        let g = build_graph(&cfg, 1).unwrap();
        assert_eq!(g.fog_nodes().len(), 500);
        assert_eq!(g.fci_count(), 200);
        for f in g.fog_nodes() {
            assert!((50..=100).contains(&f.cpu));
            assert!((200_000..=400_000).contains(&f.mem_mb));
        }
    }

    #[test]
    fn every_fci_serves_a_fog_node_and_reaches_cloud() {
        let g = build_graph(&small(), 3).unwrap();
        for fci in g.fcis() {
            assert!(!g.fns_under(fci).is_empty());
            assert!(g.link_between(fci, NodeId::CLOUD).is_some());
        }
    }

    #[test]
    fn cloud_dominates_fog_sum() {
        let g = build_graph(&small(), 5).unwrap();
        let cpu: u64 = g.fog_nodes().iter().map(|f| f.cpu).sum();
        assert!(g.cloud().cpu >= cpu);
    }

    #[test]
    fn explicit_cloud_below_fog_sum_rejected() {
        let cfg = EnvConfig {
            cloud_cpu: Some(10),
            ..small()
        };
        assert!(build_graph(&cfg, 5).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = build_graph(&small(), 11).unwrap().to_json();
        let b = build_graph(&small(), 11).unwrap().to_json();
        let c = build_graph(&small(), 12).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn latency_classes_ordered() {
        let g = build_graph(&small(), 2).unwrap();
        let fog_max = g
            .links()
            .iter()
            .filter(|l| l.class() == LinkClass::FogFci)
            .map(|l| l.latency_ms)
            .fold(0.0, f64::max);
        let other_min = g
            .links()
            .iter()
            .filter(|l| l.class() != LinkClass::FogFci)
            .map(|l| l.latency_ms)
            .fold(f64::INFINITY, f64::min);
        assert!(fog_max < other_min);
    }

    #[test]
    fn zero_fcis_is_a_config_error() {
        let cfg = EnvConfig {
            fci_count: 0,
            ..small()
        };
        assert!(matches!(build_graph(&cfg, 0), Err(TopologyError::Config(_))));
    }

    #[test]
    fn direct_fog_cloud_links_when_enabled() {
        let cfg = EnvConfig {
            fn_cloud_link_probability: 1.0,
            ..small()
        };
        let g = build_graph(&cfg, 0).unwrap();
        let f = g.fog_nodes()[0].id;
        assert!(g.link_between(f, NodeId::CLOUD).is_some());
        assert_eq!(g.hop_distance(f, NodeId::CLOUD).unwrap(), 1);
        assert_eq!(f.tier(), Tier::Fog);
    }
}
