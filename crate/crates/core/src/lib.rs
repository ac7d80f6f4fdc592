//! Hierarchical resource-aware placement of DAG applications on a
//! MultiFog-Cloud infrastructure.

pub mod config;
pub mod error;
pub mod rng;
pub mod topology;
pub mod workload;
pub mod ordering;
pub mod placement;
pub mod objective;
pub mod oracle;
pub mod simkit;
