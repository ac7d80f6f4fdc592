use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use fogsched::config::{EnvConfig, Span, WorkloadConfig};
use fogsched::ordering::Weights;
use fogsched::simkit::{run_experiment, time_algorithms, ExperimentConfig, FluctuationConfig, MetricsReport};
use log::info;

use crate::error::{CliError, CliResult};
use crate::manifest::{config_hash, now, read_manifest, write_atomic, RunManifest};
use crate::ConfigArgs;

pub const METRICS_FILE: &str = "metrics.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Replay the configuration recorded in a manifest; other configuration
    /// flags are ignored.
    #[arg(long = "from-manifest", value_name = "FILE")]
    pub from_manifest: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TimingArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Application counts to time.
    #[arg(long, value_name = "N,N,...", default_value = "1000,2000,4000")]
    pub sweep: String,
    /// Keep the fastest of this many runs per point.
    #[arg(long, default_value_t = 3)]
    pub repeats: u32,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: `{p}` is not a number")))
        })
        .collect()
}

/// Three weights; normalized when their sum is within 1e-6 of one.
pub fn parse_weights(s: &str) -> CliResult<Weights> {
    let v = parse_list(s, "--weights")?;
    let [a, b, c] = v[..] else {
        return Err(CliError::Config(format!("--weights needs three values, got {}", v.len())));
    };
    let sum = a + b + c;
    if (sum - 1.0).abs() > 1e-6 {
        return Err(CliError::Config(format!("--weights sum to {sum}, expected 1")));
    }
    Weights::new(a / sum, b / sum, c / sum).map_err(|e| CliError::Config(format!("--weights: {e}")))
}

pub fn build_config(args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    let (mut env, mut workload) = match args.preset.as_deref() {
        Some("paper-table3") => (EnvConfig::default(), WorkloadConfig::default()),
        Some(other) => return Err(CliError::Config(format!("unknown preset `{other}` (available: paper-table3)"))),
        None => {
            if args.env.is_none() || args.workload.is_none() {
                return Err(CliError::Config("give --env and --workload, or --preset paper-table3".into()));
            }
            (EnvConfig::default(), WorkloadConfig::default())
        }
    };
    if let Some(p) = &args.env {
        env = read_json(p)?;
    }
    if let Some(p) = &args.workload {
        workload = read_json(p)?;
    }
    if let Some(f) = args.scale {
        if !(f.is_finite() && f > 0.0) {
            return Err(CliError::Config(format!("--scale {f} must be positive")));
        }
        env = env.scaled(f);
        workload = workload.scaled(f);
    }
    if let Some(n) = args.apps {
        workload.app_count = n;
    }
    let mut cfg = ExperimentConfig {
        env,
        workload,
        algorithm: args.algo.parse().map_err(CliError::Config)?,
        seed: args.seed,
        replications: args.replications,
        emit_objective: args.emit_objective,
        kappa_ms: args.kappa,
        ..ExperimentConfig::default()
    };
    if let Some(w) = &args.weights {
        cfg.order.weights = parse_weights(w)?;
    }
    if let Some(d) = args.delta {
        cfg.order.delta = d;
    }
    if let Some(d) = args.big_delta {
        cfg.objective.big_delta = d;
    }
    if args.fluctuate_interval.is_some() || args.fluctuate_range.is_some() {
        let mut f = FluctuationConfig::default();
        if let Some(s) = args.fluctuate_interval {
            f.interval_s = s;
        }
        if let Some(r) = &args.fluctuate_range {
            let v = parse_list(r, "--fluctuate-range")?;
            let [lo, hi] = v[..] else {
                return Err(CliError::Config("--fluctuate-range needs LO,HI".into()));
            };
            f.availability_range = Span::new(lo, hi);
        }
        cfg.fluctuation = Some(f);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_out(out: &Option<PathBuf>) -> CliResult<&Path> {
    let dir = out.as_deref().ok_or_else(|| CliError::Config("--out DIR is required".into()))?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir)
}

pub fn metrics_csv(report: &MetricsReport) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["metric", "tier", "priority", "app_count", "value", "seed"])
        .map_err(|e| CliError::Run(e.to_string()))?;
    for row in report.rows() {
        w.write_record([
            row.metric,
            row.tier,
            row.priority.map(|p| p.to_string()).unwrap_or_default(),
            row.app_count.to_string(),
            row.value.to_string(),
            row.seed.to_string(),
        ])
        .map_err(|e| CliError::Run(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Run(e.to_string()))
}

fn timings_csv(rows: impl IntoIterator<Item = (String, u32, f64, u64)>) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["metric", "app_count", "value", "seed"])
        .map_err(|e| CliError::Run(e.to_string()))?;
    for (metric, apps, value, seed) in rows {
        w.write_record([metric, apps.to_string(), value.to_string(), seed.to_string()])
            .map_err(|e| CliError::Run(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Run(e.to_string()))
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let cfg = match &args.from_manifest {
        Some(p) => {
            let m = read_manifest(p)?;
            m.config.validate()?;
            m.config
        }
        None => build_config(&args.config)?,
    };
    let out = require_out(&args.out)?;
    let started_at = now();
    info!(
        "running {} with {} applications on {} FNs, seed {}",
        cfg.algorithm.name(),
        cfg.workload.app_count,
        cfg.env.fn_count,
        cfg.seed
    );
    let report = run_experiment(&cfg)?;
    let files = [
        (METRICS_FILE, metrics_csv(&report)?),
        (
            REPORT_FILE,
            serde_json::to_vec_pretty(&report).map_err(|e| CliError::Run(e.to_string()))?,
        ),
        (TIMINGS_FILE, timings_csv(report.timing_rows())?),
    ];
    for (name, bytes) in &files {
        write_atomic(&out.join(name), bytes)?;
    }
    let manifest = RunManifest {
        config_hash: config_hash(&cfg),
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: now(),
        outputs: files.iter().map(|(n, _)| n.to_string()).collect(),
        config: cfg,
    };
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Run(e.to_string()))?;
    write_atomic(&out.join(MANIFEST_FILE), &bytes)?;
    println!(
        "fog cpu {:.2}%  cloud cpu {:.2}%  placement-rule violations {}  unmapped edges {}  -> {}",
        report.fog_util.cpu_pct,
        report.cloud_util.cpu_pct,
        report.violations.placement_rules(),
        report.violations.unmapped_edges,
        out.display()
    );
    Ok(())
}

pub fn cmd_timing(args: &TimingArgs) -> CliResult<()> {
    let cfg = build_config(&args.config)?;
    let counts: Vec<u32> = args
        .sweep
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("--sweep: `{s}` is not a count")))
        })
        .collect::<CliResult<_>>()?;
    let out = require_out(&args.out)?;
    let points = time_algorithms(&cfg, &counts, args.repeats)?;
    let rows = points.iter().flat_map(|p| {
        [
            ("order_total_s".to_string(), p.app_count, p.order_total_s, cfg.seed),
            ("place_total_s".to_string(), p.app_count, p.place_total_s, cfg.seed),
            ("per_app_avg_ms".to_string(), p.app_count, p.per_app_avg_ms, cfg.seed),
            ("task_count".to_string(), p.app_count, p.task_count as f64, cfg.seed),
        ]
    });
    write_atomic(&out.join(TIMINGS_FILE), &timings_csv(rows)?)?;
    for p in &points {
        println!(
            "{:>7} apps {:>8} tasks  order {:.4}s  place {:.4}s",
            p.app_count, p.task_count, p.order_total_s, p.place_total_s
        );
    }
    Ok(())
}
