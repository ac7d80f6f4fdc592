//! `fogsched` command-line driver.

mod error;
mod manifest;
mod oracle;
mod plotdata;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "fogsched", version, about = "Fog/cloud DAG placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write metrics, report and manifest.
    Run(run::RunArgs),
    /// Time ordering and placement across application counts.
    Timing(run::TimingArgs),
    /// Exhaustively place one small application.
    Oracle(oracle::OracleArgs),
    /// Reshape run output into per-figure series.
    Plotdata(plotdata::PlotArgs),
}

/// Flags shared by every command that builds an experiment configuration.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Environment JSON.
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    /// Workload JSON.
    #[arg(long, value_name = "FILE")]
    pub workload: Option<PathBuf>,
    /// Built-in parameter set; `--env`/`--workload` override its parts.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Multiply entity counts (FNs, FCIs, applications, task budget).
    #[arg(long, value_name = "F")]
    pub scale: Option<f64>,
    /// Override the application count after scaling.
    #[arg(long, value_name = "N")]
    pub apps: Option<u32>,
    #[arg(long, value_name = "NAME", default_value = "herafc")]
    pub algo: String,
    /// Makespan, priority and resource weights.
    #[arg(long, value_name = "A,B,C")]
    pub weights: Option<String>,
    /// Out-degree offset in the mean critical value.
    #[arg(long, value_name = "F")]
    pub delta: Option<f64>,
    /// Fog preference factor in the objective, in (0, 1).
    #[arg(long = "big-delta", value_name = "F")]
    pub big_delta: Option<f64>,
    #[arg(long, value_name = "MS")]
    pub kappa: Option<f64>,
    #[arg(long = "fluctuate-interval", value_name = "S")]
    pub fluctuate_interval: Option<f64>,
    #[arg(long = "fluctuate-range", value_name = "LO,HI")]
    pub fluctuate_range: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u32,
    #[arg(long = "emit-objective")]
    pub emit_objective: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FOGSCHED_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run::cmd_run(&a),
        Command::Timing(a) => run::cmd_timing(&a),
        Command::Oracle(a) => oracle::cmd_oracle(&a),
        Command::Plotdata(a) => plotdata::cmd_plotdata(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fogsched: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
