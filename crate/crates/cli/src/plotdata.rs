//! Reshape `metrics.csv` / `timings.csv` rows into one series file per
//! figure family. Values are averaged over seeds and input files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::manifest::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Figure {
    UtilFog,
    UtilCloud,
    LatencyByPriority,
    ShareByPriority,
    OrderAblation,
    Timing,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::UtilFog => "util-fog",
            Figure::UtilCloud => "util-cloud",
            Figure::LatencyByPriority => "latency-by-priority",
            Figure::ShareByPriority => "share-by-priority",
            Figure::OrderAblation => "order-ablation",
            Figure::Timing => "timing",
        }
    }
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// `metrics.csv` or `timings.csv` from a run; repeat to combine runs.
    #[arg(long, value_name = "FILE", required = true)]
    pub input: Vec<PathBuf>,
    /// Figure family to emit; repeatable.
    #[arg(long, value_enum, required = true)]
    pub fig: Vec<Figure>,
    /// Directory receiving `<figure>.csv`.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
struct Row {
    metric: String,
    tier: String,
    priority: Option<u8>,
    app_count: u32,
    value: f64,
}

fn load(path: &Path) -> CliResult<Vec<Row>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let (Some(metric), Some(apps), Some(value)) = (col("metric"), col("app_count"), col("value")) else {
        return Err(bad("expected metric, app_count and value columns".into()));
    };
    let (tier, priority) = (col("tier"), col("priority"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: Option<usize>| i.and_then(|i| rec.get(i)).unwrap_or("");
        out.push(Row {
            metric: field(Some(metric)).to_string(),
            tier: field(tier).to_string(),
            priority: match field(priority) {
                "" => None,
                p => Some(p.parse().map_err(|_| bad(format!("bad priority `{p}`")))?),
            },
            app_count: field(Some(apps)).parse().map_err(|_| bad("bad app_count".into()))?,
            value: field(Some(value)).parse().map_err(|_| bad("bad value".into()))?,
        });
    }
    Ok(out)
}

#[derive(Default)]
struct Mean(f64, u32);

impl Mean {
    fn add(&mut self, v: f64) {
        self.0 += v;
        self.1 += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.1 > 0).then(|| self.0 / self.1 as f64)
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Header and body rows for one figure; `None` when the input has rows but
/// none this figure can use.
fn reshape(fig: Figure, rows: &[Row]) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
    let mut body = Vec::new();
    let header;
    match fig {
        Figure::UtilFog | Figure::UtilCloud => {
            header = vec!["app_count", "cpu_pct", "mem_pct", "bw_pct"];
            let tier = if fig == Figure::UtilFog { "fog" } else { "cloud" };
            let mut acc: BTreeMap<u32, [Mean; 3]> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.tier == tier) {
                let slot = match r.metric.as_str() {
                    "util_cpu_pct" => 0,
                    "util_mem_pct" => 1,
                    "util_bw_pct" => 2,
                    _ => continue,
                };
                acc.entry(r.app_count).or_default()[slot].add(r.value);
            }
            for (apps, m) in &acc {
                body.push(vec![apps.to_string(), cell(m[0].get()), cell(m[1].get()), cell(m[2].get())]);
            }
        }
        Figure::LatencyByPriority | Figure::ShareByPriority => {
            let (metric, cols) = if fig == Figure::LatencyByPriority {
                ("latency_avg_ms", ["fog_avg_ms", "cloud_avg_ms"])
            } else {
                ("share_pct", ["fog_pct", "cloud_pct"])
            };
            header = vec!["app_count", "priority", cols[0], cols[1]];
            let mut acc: BTreeMap<(u32, u8), [Mean; 2]> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.metric == metric) {
                let (Some(p), slot) = (r.priority, if r.tier == "fog" { 0 } else { 1 }) else {
                    continue;
                };
                acc.entry((r.app_count, p)).or_default()[slot].add(r.value);
            }
            for ((apps, p), m) in &acc {
                body.push(vec![apps.to_string(), p.to_string(), cell(m[0].get()), cell(m[1].get())]);
            }
        }
        Figure::OrderAblation => {
            header = vec!["app_count", "algorithm", "fog_cpu_util_pct"];
            let mut acc: BTreeMap<(u32, String), Mean> = BTreeMap::new();
            for r in rows {
                if let Some(algo) = r.metric.strip_prefix("order_ablation_util_pct:") {
                    acc.entry((r.app_count, algo.to_string())).or_default().add(r.value);
                }
            }
            for ((apps, algo), m) in &acc {
                body.push(vec![apps.to_string(), algo.clone(), cell(m.get())]);
            }
        }
        Figure::Timing => {
            header = vec!["app_count", "order_total_s", "place_total_s", "per_app_avg_ms"];
            let mut acc: BTreeMap<u32, [Mean; 3]> = BTreeMap::new();
            for r in rows {
                let slot = match r.metric.as_str() {
                    "order_total_s" => 0,
                    "place_total_s" => 1,
                    "per_app_avg_ms" => 2,
                    _ => continue,
                };
                acc.entry(r.app_count).or_default()[slot].add(r.value);
            }
            for (apps, m) in &acc {
                body.push(vec![apps.to_string(), cell(m[0].get()), cell(m[1].get()), cell(m[2].get())]);
            }
        }
    }
    if body.is_empty() && !rows.is_empty() {
        return None;
    }
    Some((header, body))
}

pub fn cmd_plotdata(args: &PlotArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for p in &args.input {
        rows.extend(load(p)?);
    }
    let mut outputs = Vec::new();
    for &fig in &args.fig {
        let (header, body) = reshape(fig, &rows).ok_or_else(|| {
            CliError::Config(format!(
                "--fig {}: the input has no rows for this figure (util-* and share/latency need metrics.csv, timing needs timings.csv, order-ablation needs ablation rows)",
                fig.name()
            ))
        })?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&header).map_err(|e| CliError::Run(e.to_string()))?;
        for r in body {
            w.write_record(&r).map_err(|e| CliError::Run(e.to_string()))?;
        }
        outputs.push((fig, w.into_inner().map_err(|e| CliError::Run(e.to_string()))?));
    }
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    for (fig, bytes) in outputs {
        let path = args.out.join(format!("{}.csv", fig.name()));
        write_atomic(&path, &bytes)?;
        println!("{}", path.display());
    }
    Ok(())
}
