//! Experiment harness: JSON configs, seeded multi-policy sweeps with CSV
//! output, and the pool-size comparison table.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, Bytes, ConfigError, ExperimentSpec, PolicySpec, SweepAxis, SweepValue};
pub use report::{format_pool_size_table, pool_size_report, PoolSizeRow};
pub use run::{resolve_out_dir, run_experiment, run_policy, ExperimentReport, RunSummary, RunTiming, CSV_HEADER, OUT_DIR_ENV};
