//! Experiment driver: configuration, run records, tables and sweeps.
//!
//! A run is fully determined by its [`ExperimentConfig`]. Records come back
//! in grid order (cell, then ε, then scheme) whatever the worker count.

mod config;
mod record;
mod run;
mod sweep;
mod table;

use thiserror::Error;

pub use config::{ExperimentConfig, InstanceConfig, SchemeOverride, StartMode};
pub use record::{dump_trajectory, read_jsonl, write_jsonl, RunRecord, SweepTag};
pub use run::{build_instance, run_experiment, run_on_instance, Instance};
pub use sweep::{parameter_sweep, SweepAxis, SweepOutput, SweepPoint, Trend};
pub use table::{emit_table, TableLayout, TABLE_FORMAT};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("table: {0}")]
    Table(String),
    #[error("record has no trajectory; rerun with keep_trajectories")]
    NoTrajectory,
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Poly(#[from] crate::polynomial::PolyError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
