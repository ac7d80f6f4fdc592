use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fogsched::config::EnvConfig;
use fogsched::topology::{build_graph, NodeId};
use fogsched::workload::{Application, Task, TaskEdge, TaskId};
use serde_json::Value;
use tempfile::TempDir;

fn fogsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogsched"))
        .args(args)
        .env_remove("FOGSCHED_LOG")
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn small_run(out: &str) -> Output {
    fogsched(&["run", "--preset", "paper-table3", "--scale", "0.02", "--seed", "5", "--out", out])
}

fn task(id: u32, cpu: u64) -> Task {
    Task {
        id: TaskId(id),
        cpu,
        mem_mb: 200,
        makespan_ms: 100,
        priority: 3,
    }
}

/// Graph with `fns` fog nodes and an app whose tasks have the given CPU
/// demands, chained by edges.
fn write_instance(dir: &TempDir, fns: u32, cpus: &[u64]) -> (String, String) {
    let env = EnvConfig {
        fn_count: fns,
        fci_count: 1,
        ..EnvConfig::default()
    };
    let graph = build_graph(&env, 3).unwrap();
    let app = Application {
        id: 0,
        home_fn: NodeId::fog(0),
        tasks: cpus.iter().enumerate().map(|(i, &c)| task(i as u32, c)).collect(),
        edges: (1..cpus.len() as u32)
            .map(|i| TaskEdge {
                src: TaskId(i - 1),
                dst: TaskId(i),
                bandwidth_mbps: 50,
                max_latency_ms: 500.0,
            })
            .collect(),
    };
    let (g, a) = (path(dir, "graph.json"), path(dir, "app.json"));
    fs::write(&g, serde_json::to_string(&graph.to_doc()).unwrap()).unwrap();
    fs::write(&a, serde_json::to_string(&app).unwrap()).unwrap();
    (g, a)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn run_writes_outputs_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r");
    let o = small_run(&out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["metrics.csv", "report.json", "timings.csv", "manifest.json"] {
        assert!(dir.path().join("r").join(f).exists(), "{f} missing");
    }
    let metrics = fs::read_to_string(dir.path().join("r/metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,tier,priority,app_count,value,seed\n"));
    let m = read_json(&dir.path().join("r/manifest.json"));
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn replay_from_manifest_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a"), path(&dir, "b"));
    assert!(small_run(&a).status.success());
    let manifest = format!("{a}/manifest.json");
    let o = fogsched(&["run", "--from-manifest", &manifest, "--out", &b]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(format!("{a}/metrics.csv")).unwrap(), fs::read(format!("{b}/metrics.csv")).unwrap());
    assert_eq!(
        read_json(Path::new(&manifest))["config_hash"],
        read_json(&Path::new(&b).join("manifest.json"))["config_hash"]
    );
}

#[test]
fn missing_out_is_config_error() {
    let o = fogsched(&["run", "--preset", "paper-table3", "--scale", "0.02"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_weights_are_config_error() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r");
    let o = fogsched(&["run", "--preset", "paper-table3", "--scale", "0.02", "--weights", "0.5,0.5,0.5", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--weights"));
}

#[test]
fn unknown_flag_is_config_error() {
    assert_eq!(fogsched(&["run", "--nonsense"]).status.code(), Some(2));
}

#[test]
fn oracle_refuses_oversized_instances() {
    let dir = TempDir::new().unwrap();
    let (g, a) = write_instance(&dir, 2, &[5; 7]);
    let o = fogsched(&["oracle", "--graph", &g, "--app", &a]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn oracle_compare_reports_gap() {
    let dir = TempDir::new().unwrap();
    let (g, a) = write_instance(&dir, 3, &[5, 10, 20]);
    let out = path(&dir, "oracle.json");
    let o = fogsched(&["oracle", "--graph", &g, "--app", &a, "--compare-herafc", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(Path::new(&out));
    assert_eq!(v["feasible"], true);
    assert_eq!(v["enumerated_count"], 64);
    assert!(v["heuristic_gap"].as_f64().unwrap() >= 1.0 - 1e-12);
    assert_eq!(v["feasibility_agrees"], true);
}

#[test]
fn oracle_and_heuristic_agree_on_infeasible() {
    let dir = TempDir::new().unwrap();
    // No host, the cloud included, offers a million cores.
    let (g, a) = write_instance(&dir, 2, &[5, 1_000_000]);
    let out = path(&dir, "oracle.json");
    let o = fogsched(&["oracle", "--graph", &g, "--app", &a, "--compare-herafc", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(Path::new(&out));
    assert_eq!(v["feasible"], false);
    assert_eq!(v["best_placement"], "infeasible");
    assert_eq!(v["herafc"]["feasible"], false);
    assert_eq!(v["feasibility_agrees"], true);
}

#[test]
fn plotdata_reshapes_metrics() {
    let dir = TempDir::new().unwrap();
    let run = path(&dir, "r");
    assert!(small_run(&run).status.success());
    let plots = path(&dir, "plots");
    let metrics = format!("{run}/metrics.csv");
    let o = fogsched(&["plotdata", "--input", &metrics, "--fig", "share-by-priority", "--fig", "util-fog", "--out", &plots]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let share = fs::read_to_string(format!("{plots}/share-by-priority.csv")).unwrap();
    let mut lines = share.lines();
    assert_eq!(lines.next(), Some("app_count,priority,fog_pct,cloud_pct"));
    for l in lines {
        let cols: Vec<f64> = l.split(',').skip(2).map(|c| c.parse().unwrap()).collect();
        assert!((cols[0] + cols[1] - 100.0).abs() < 1e-6, "{l}");
    }
    let util = fs::read_to_string(format!("{plots}/util-fog.csv")).unwrap();
    assert_eq!(util.lines().count(), 2);
}

#[test]
fn plotdata_empty_input_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "empty.csv");
    fs::write(&input, "metric,tier,priority,app_count,value,seed\n").unwrap();
    let plots = path(&dir, "plots");
    let o = fogsched(&["plotdata", "--input", &input, "--fig", "timing", "--out", &plots]);
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(format!("{plots}/timing.csv")).unwrap(),
        "app_count,order_total_s,place_total_s,per_app_avg_ms\n"
    );
}

#[test]
fn plotdata_rejects_unknown_figure() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "empty.csv");
    fs::write(&input, "").unwrap();
    let o = fogsched(&["plotdata", "--input", &input, "--fig", "heatmap", "--out", &path(&dir, "p")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plotdata_rejects_input_without_matching_rows() {
    let dir = TempDir::new().unwrap();
    let run = path(&dir, "r");
    assert!(small_run(&run).status.success());
    let timings = format!("{run}/timings.csv");
    let o = fogsched(&["plotdata", "--input", &timings, "--fig", "util-fog", "--out", &path(&dir, "p")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn timing_writes_one_row_per_metric_and_point() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "t");
    let o = fogsched(&["timing", "--preset", "paper-table3", "--scale", "0.02", "--sweep", "10,20", "--repeats", "1", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = fs::read_to_string(format!("{out}/timings.csv")).unwrap();
    assert_eq!(t.lines().count(), 1 + 2 * 4);
}
