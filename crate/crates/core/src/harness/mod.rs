//! Experiment orchestration and data plumbing: method batteries run on a
//! single path, config-driven Monte Carlo tables, CSV ingestion of intraday
//! prices and Benjamini–Hochberg selection.

mod battery;
mod config;
mod experiment;
mod ingest;
mod select;

pub use battery::{evaluate, MethodOutcome, MethodSpec, PaTuning, LaTuning, LmCalibration, Tuning};
pub use config::{Design, ExperimentConfig};
pub use experiment::{
    run_experiment, run_experiment_with_workers, write_outputs, ExperimentResult, ResultRow,
    WORKERS_ENV,
};
pub use ingest::{ingest_csv_days, ingest_day_csv, parse_timestamp, read_ticks, Session, Tick};
pub use select::bh_select;
