//! Discrete-event simulation of a software house running the waterfall
//! lifecycle.
//!
//! Projects of three sizes arrive over time and walk through five sequential
//! phases (analysis, design, implementation, testing, maintenance). Each phase
//! acquires a size-dependent batch of staff from a shared role pool, holds it
//! for a stochastic service time, releases it, and may fail, sending the
//! project one phase back. The crate provides:
//!
//! - [`kernel`]: a minimal deterministic event calendar with counted FIFO
//!   resource pools,
//! - [`stochastic`]: seeded, portable random streams and the samplers the
//!   model needs,
//! - [`model`]: the waterfall process itself and [`model::run_scenario`],
//! - [`metrics`] / [`report`]: per-run summary statistics, text reports and
//!   CSV export,
//! - [`optimizer`]: the stepwise search for staffing levels that eliminate
//!   resource waits,
//! - [`scenario`]: the TOML scenario file schema with defaults and
//!   `key=value` overrides.
//!
//! Everything is deterministic: the same scenario and seed produce
//! byte-identical outputs.
//!
//! ```
//! use waterfall_sim::{run_scenario, summarize, Phase, ScenarioConfig};
//!
//! let config = ScenarioConfig::default().with_seed(7);
//! let record = run_scenario(&config).unwrap();
//! assert_eq!(record.projects.len(), 100);
//!
//! let summary = summarize(&record);
//! let implementation = summary.wait_stats.get(Some(Phase::Implementation), None);
//! let maintenance = summary.wait_stats.get(Some(Phase::Maintenance), None);
//! assert!(implementation.mean > maintenance.mean);
//! ```

pub mod kernel;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod report;
pub mod scenario;
pub mod stochastic;

pub use kernel::{KernelError, PoolId, PoolLevel, SimTime, Simulation};
pub use metrics::{summarize, FailureCell, RunSummary, StatSummary, UtilizationPoint};
pub use model::{
    run_scenario, ConfigError, DemandTable, ModelError, Phase, PhaseExecution, PhaseSpec, Project,
    Role, RoleMap, RunRecord, ScenarioConfig, Size, SizeMap,
};
pub use optimizer::{
    find_zero_wait, IncrementMode, OptimizerConfig, OptimizerError, OptimizerIteration,
    OptimizerResult,
};
pub use stochastic::{RngStream, SizeDistribution};
