use std::fmt;
use std::path::Path;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Config(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
    /// Instance exceeds the exhaustive-search limits (exit 4).
    OracleSize(String),
    /// Anything else raised by the simulator (exit 1).
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::OracleSize(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::OracleSize(m) => write!(f, "oracle refused: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl From<fogsched::error::SimError> for CliError {
    fn from(e: fogsched::error::SimError) -> Self {
        use fogsched::error::SimError;
        match e {
            SimError::Config(_) | SimError::Ordering(_) => CliError::Config(e.to_string()),
            SimError::Topology(fogsched::error::TopologyError::Config(_))
            | SimError::Workload(fogsched::error::WorkloadError::Config(_))
            | SimError::Workload(fogsched::error::WorkloadError::TaskBudget { .. })
            | SimError::Workload(fogsched::error::WorkloadError::NoFogNodes) => CliError::Config(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
