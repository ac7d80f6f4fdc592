use std::fs;
use std::path::PathBuf;

use clap::Args;
use fogsched::error::OracleError;
use fogsched::objective::{eval_mfc, ObjectiveParams};
use fogsched::oracle::{exhaustive_place, heuristic_gap, placement_feasible, OracleLimits};
use fogsched::ordering::{critical_values, order_tasks, OrderParams};
use fogsched::placement::{herafc_place, ResourceMatrix};
use fogsched::topology::{GraphDoc, ResourceGraph};
use fogsched::workload::Application;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::write_atomic;

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Resource graph JSON.
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
    /// Application JSON.
    #[arg(long, value_name = "FILE")]
    pub app: PathBuf,
    /// Also place with the heuristic and report the score ratio.
    #[arg(long = "compare-herafc")]
    pub compare_herafc: bool,
    #[arg(long = "max-tasks", default_value_t = 6)]
    pub max_tasks: usize,
    #[arg(long = "max-nodes", default_value_t = 5)]
    pub max_nodes: usize,
    #[arg(long = "big-delta", value_name = "F")]
    pub big_delta: Option<f64>,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<()> {
    let graph_text = fs::read_to_string(&args.graph).map_err(|e| CliError::io(&args.graph, e))?;
    let doc: GraphDoc = serde_json::from_str(&graph_text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.graph.display())))?;
    let graph = ResourceGraph::from_doc(doc).map_err(|e| CliError::Config(format!("{}: {e}", args.graph.display())))?;
    let app_text = fs::read_to_string(&args.app).map_err(|e| CliError::io(&args.app, e))?;
    let app = Application::from_json(&app_text).map_err(|e| CliError::Config(format!("{}: {e}", args.app.display())))?;
    if !graph.contains(app.home_fn) {
        return Err(CliError::Config(format!("home FN {} is not in the graph", app.home_fn)));
    }

    let mut params = ObjectiveParams::default();
    if let Some(d) = args.big_delta {
        params.big_delta = d;
    }
    let limits = OracleLimits {
        max_tasks: args.max_tasks,
        max_nodes: args.max_nodes,
    };
    let rm = ResourceMatrix::new(&graph);
    let mut result = exhaustive_place(&app, &graph, &rm, &limits, &params).map_err(|e| match e {
        OracleError::TooLarge { .. } => CliError::OracleSize(e.to_string()),
        OracleError::Objective(_) => CliError::Config(e.to_string()),
        other => CliError::Run(other.to_string()),
    })?;

    let mut doc = result.to_json_value();
    if args.compare_herafc {
        let order = OrderParams::default();
        let run = || -> Result<_, Box<dyn std::error::Error>> {
            let q = order_tasks(&app, &graph, &order)?;
            let wv = critical_values(&app, &graph, &order)?;
            Ok(herafc_place(&app, &graph, &rm, &q, &wv)?)
        };
        let h = run().map_err(|e| CliError::Run(e.to_string()))?;
        let h_feasible = placement_feasible(&h, &app, &graph, &rm);
        let h_score = if h_feasible {
            eval_mfc(&h, &app, &rm, &params).ok().map(|b| b.total)
        } else {
            None
        };
        result.heuristic_gap = heuristic_gap(&result, &h, &app, &graph, &rm, &params).map_err(|e| CliError::Run(e.to_string()))?;
        doc["heuristic_gap"] = json!(result.heuristic_gap);
        doc["herafc"] = json!({
            "feasible": h_feasible,
            "score": h_score,
            "placement": h.to_doc(),
        });
        doc["feasibility_agrees"] = json!(h_feasible == result.is_feasible());
    }

    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    match &args.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
