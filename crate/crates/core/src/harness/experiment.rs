use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{JumpError, Result};
use crate::rng::{self, tag};
use crate::simulate::simulate_day;

use super::battery::evaluate;
use super::config::ExperimentConfig;

/// Environment variable capping the worker pool.
pub const WORKERS_ENV: &str = "JUMPLAB_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub design: String,
    pub grid_seconds: usize,
    pub method: String,
    /// Alternative parameter; empty for size designs.
    pub alt_param: Option<f64>,
    pub level: f64,
    pub rejection_frequency: f64,
    /// Replications that produced a statistic.
    pub replications: usize,
    /// Replications excluded after a statistic error.
    pub failed: usize,
    pub mc_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn row(&self, grid_seconds: usize, method: &str, alt: Option<f64>, level: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.grid_seconds == grid_seconds && r.method == method && r.alt_param == alt && r.level == level
        })
    }
}

/// Rejection flags of one replication in one `(alt, grid)` cell, indexed
/// `[method][level]`; `None` when any method failed on that path.
type CellOutcome = Option<Vec<Vec<bool>>>;

fn replicate(cfg: &ExperimentConfig, rep: usize) -> Vec<CellOutcome> {
    let rep_seed = rng::derive(cfg.base_seed, rep as u64);
    let jump_time = cfg.jump_time.unwrap_or_else(|| {
        let mut g = rng::substream(rep_seed, tag::JUMPS ^ 0xF1);
        g.random_range(0.0..cfg.days as f64)
    });
    let mut cells = Vec::new();
    for alt in cfg.alternative_values() {
        let spec = cfg.simulation(alt, jump_time.max(f64::MIN_POSITIVE));
        let day = simulate_day(&spec, rep_seed);
        for &grid in &cfg.grids {
            let outcome = day.as_ref().ok().and_then(|d| {
                let path = d.observed.aggregate_last_tick(grid).ok()?;
                let eval_seed = rng::derive(rep_seed, grid as u64);
                let res = evaluate(&path, &cfg.methods, &cfg.tuning, &cfg.bootstrap, eval_seed).ok()?;
                Some(res.iter().map(|m| cfg.levels.iter().map(|&l| m.rejects(l)).collect()).collect())
            });
            cells.push(outcome);
        }
    }
    cells
}

/// Runs the table on the current rayon pool. Replications are seeded by
/// `derive(base_seed, rep)` and merged in index order, so the result does not
/// depend on the number of workers.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let per_rep: Vec<Vec<CellOutcome>> =
        (0..cfg.replications).into_par_iter().map(|rep| replicate(cfg, rep)).collect();

    let alts = cfg.alternative_values();
    let mut rows = Vec::new();
    let mut cell = 0;
    for alt in &alts {
        for &grid in &cfg.grids {
            let outcomes: Vec<&Vec<Vec<bool>>> = per_rep.iter().filter_map(|r| r[cell].as_ref()).collect();
            let ok = outcomes.len();
            for (mi, m) in cfg.methods.iter().enumerate() {
                for (li, &level) in cfg.levels.iter().enumerate() {
                    let hits = outcomes.iter().filter(|o| o[mi][li]).count();
                    let f = if ok == 0 { f64::NAN } else { hits as f64 / ok as f64 };
                    rows.push(ResultRow {
                        design: cfg.design.label().into(),
                        grid_seconds: grid,
                        method: m.label(),
                        alt_param: *alt,
                        level,
                        rejection_frequency: f,
                        replications: ok,
                        failed: cfg.replications - ok,
                        mc_std_error: (f * (1.0 - f) / ok as f64).sqrt(),
                    });
                }
            }
            cell += 1;
        }
    }
    Ok(ExperimentResult { rows })
}

/// Runs on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| JumpError::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ExperimentConfig,
    crate_version: &'static str,
    rows: usize,
    created_utc: String,
}

/// Writes `out` as CSV and `out` with a `.json` extension as the sidecar.
/// Returns the sidecar path.
pub fn write_outputs(result: &ExperimentResult, cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(out).map_err(|e| JumpError::Io(e.into()))?;
    for row in &result.rows {
        w.serialize(row).map_err(|e| JumpError::Io(e.into()))?;
    }
    w.flush()?;
    let sidecar = out.with_extension("json");
    let meta = Sidecar {
        config: cfg,
        crate_version: env!("CARGO_PKG_VERSION"),
        rows: result.rows.len(),
        created_utc: chrono::Utc::now().to_rfc3339(),
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| JumpError::Parse(e.to_string()))?;
    fs::write(&sidecar, text)?;
    Ok(sidecar)
}
