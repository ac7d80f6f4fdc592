//! Wall-clock sweep of ordering and placement cost over application counts.

use serde::Serialize;

use super::{simulate, ExperimentConfig};
use crate::error::SimError;
use crate::topology::build_graph;
use crate::workload::generate_workload;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingPoint {
    pub app_count: u32,
    pub task_count: u64,
    pub edge_count: u64,
    pub order_total_s: f64,
    pub place_total_s: f64,
    pub per_app_avg_ms: f64,
}

/// Time ordering and placement at each application count on one graph.
/// Each point keeps the fastest of `repeats` runs.
pub fn time_algorithms(cfg: &ExperimentConfig, app_counts: &[u32], repeats: u32) -> Result<Vec<TimingPoint>, SimError> {
    cfg.validate()?;
    let graph = build_graph(&cfg.env, cfg.seed)?;
    let mut run_cfg = cfg.clone();
    run_cfg.audit = false;
    run_cfg.emit_objective = false;
    let mut out = Vec::with_capacity(app_counts.len());
    for &count in app_counts {
        run_cfg.workload.app_count = count;
        run_cfg.workload.max_total_tasks = run_cfg.workload.max_total_tasks.max(count as u64 * run_cfg.workload.tasks_per_app.max as u64);
        let apps = generate_workload(&run_cfg.workload, &graph, cfg.seed)?;
        let mut best: Option<TimingPoint> = None;
        for _ in 0..repeats.max(1) {
            let r = simulate(&run_cfg, &graph, &apps, cfg.seed)?;
            let p = TimingPoint {
                app_count: count,
                task_count: r.task_count,
                edge_count: r.edge_count,
                order_total_s: r.timings.order_total_s,
                place_total_s: r.timings.place_total_s,
                per_app_avg_ms: r.timings.per_app_avg_ms,
            };
            best = Some(match best {
                None => p,
                Some(b) => TimingPoint {
                    order_total_s: b.order_total_s.min(p.order_total_s),
                    place_total_s: b.place_total_s.min(p.place_total_s),
                    per_app_avg_ms: b.per_app_avg_ms.min(p.per_app_avg_ms),
                    ..b
                },
            });
        }
        out.extend(best);
    }
    Ok(out)
}
