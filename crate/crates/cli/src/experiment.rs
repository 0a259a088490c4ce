//! Seeded multi-trial runs and their CSV/JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use duelgrad::solver::{epoch_rgd_run, rgd_run, EpochSummary, TrajectoryRow};
use duelgrad::{derived_rng, ComparisonOracle, Objective, RunRecord, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Plan, Prepared};
use crate::error::{HarnessError, HarnessResult};

pub const TRAJECTORY_HEADER: &str = "t,queries,gap,dist_sq";
pub const SUMMARY_HEADER: &str = "trial,seed,total_queries,min_gap,final_gap,final_dist_sq,wall_time_ms";
const EPOCH_HEADER: &str = "k,diameter,eta,gamma,budget,dist_sq_start,dist_sq_end,gap_end,queries_end";

/// Random stream for sphere directions within a trial; the oracle uses the next one.
pub const DIRECTION_STREAM: u64 = 0;
pub const ORACLE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub trial: u64,
    pub seed: u64,
    pub total_queries: u64,
    pub min_gap: f64,
    pub final_gap: f64,
    pub final_dist_sq: f64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: u64,
    pub eps: f64,
    pub mean_min_gap: f64,
    pub median_min_gap: f64,
    /// Share of trials with `min_gap ≤ eps`.
    pub fraction_reached: f64,
}

impl Aggregate {
    pub fn from_rows(rows: &[SummaryRow], eps: f64) -> Self {
        let n = rows.len() as f64;
        let mut gaps: Vec<f64> = rows.iter().map(|r| r.min_gap).collect();
        gaps.sort_by(f64::total_cmp);
        let median = match gaps.len() {
            0 => f64::NAN,
            m if m % 2 == 1 => gaps[m / 2],
            m => 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]),
        };
        Self {
            trials: rows.len() as u64,
            eps,
            mean_min_gap: gaps.iter().sum::<f64>() / n,
            median_min_gap: median,
            fraction_reached: rows.iter().filter(|r| r.min_gap <= eps).count() as f64 / n,
        }
    }
}

impl std::fmt::Display for Aggregate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trials={} mean_min_gap={:?} median_min_gap={:?} reached(min_gap<={:?})={:?}",
            self.trials, self.mean_min_gap, self.median_min_gap, self.eps, self.fraction_reached
        )
    }
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a> {
    config: &'a ExperimentConfig,
    base_seed: u64,
    total_budget: u64,
    aggregate: Aggregate,
    trials: &'a [SummaryRow],
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<SummaryRow>,
    pub aggregate: Aggregate,
    pub output: PathBuf,
}

/// Seed of trial `index`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    base_seed.wrapping_add(index)
}

/// Runs a single trial with its own oracle and direction streams.
pub fn run_trial(prepared: &Prepared, seed: u64) -> HarnessResult<RunRecord> {
    let objective = &prepared.objective;
    let mut oracle = ComparisonOracle::new(objective, &prepared.transfer, derived_rng(seed, ORACLE_STREAM));
    let mut dirs = derived_rng(seed, DIRECTION_STREAM);
    let domain = objective.domain();
    let record = match &prepared.plan {
        Plan::Single(t) => {
            let cfg = SolverConfig::from_tuning(t, prepared.w1.clone())?;
            rgd_run(&cfg, &mut oracle, domain, &mut dirs, prepared.recording)?
        }
        Plan::Epochs(schedule) => epoch_rgd_run(
            schedule,
            &prepared.w1,
            &mut oracle,
            domain,
            &mut dirs,
            prepared.recording,
        )?,
    };
    Ok(record)
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{:?},{:?}", r.t, r.queries, r.gap, r.dist_sq);
    }
    out
}

fn epochs_csv(epochs: &[EpochSummary]) -> String {
    let mut out = String::from(EPOCH_HEADER);
    out.push('\n');
    for e in epochs {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{},{:?},{:?},{:?},{}",
            e.k, e.diameter, e.eta, e.gamma, e.budget, e.dist_sq_start, e.dist_sq_end, e.gap_end, e.queries_end
        );
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{}",
            r.trial, r.seed, r.total_queries, r.min_gap, r.final_gap, r.final_dist_sq, r.wall_time_ms
        );
    }
    out
}

fn write(path: &Path, contents: &str) -> HarnessResult<()> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn create_dir(path: &Path) -> HarnessResult<()> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

/// Resolves the base seed: the config value, else `DUELGRAD_SEED`, else 0.
pub fn resolve_base_seed(cfg: &ExperimentConfig) -> HarnessResult<u64> {
    if let Some(seed) = cfg.base_seed {
        return Ok(seed);
    }
    match std::env::var("DUELGRAD_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| HarnessError::config("DUELGRAD_SEED", format!("`{s}` is not a u64"))),
        Err(_) => Ok(0),
    }
}

/// Runs every trial, writing `trajectories/trial_NNNN.csv` (and
/// `epochs/trial_NNNN.csv` for epoch runs) as each finishes, then
/// `summary.csv` and `summary.json`.
///
/// Trials run on the current rayon pool; install a sized pool to bound them.
pub fn run_experiment(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutcome> {
    let prepared = cfg.prepare()?;
    let base_seed = resolve_base_seed(cfg)?;
    let out = cfg.output.clone();
    let traj_dir = out.join("trajectories");
    let epoch_dir = out.join("epochs");
    create_dir(&traj_dir)?;
    let epochs = matches!(prepared.plan, Plan::Epochs(_));
    if epochs {
        create_dir(&epoch_dir)?;
    }

    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(base_seed, trial);
            let start = Instant::now();
            let record = run_trial(&prepared, seed)?;
            let elapsed = start.elapsed().as_millis() as u64;
            let name = format!("trial_{trial:04}.csv");
            write(&traj_dir.join(&name), &trajectory_csv(&record.rows))?;
            if epochs {
                write(&epoch_dir.join(&name), &epochs_csv(&record.epochs))?;
            }
            Ok(SummaryRow {
                trial,
                seed,
                total_queries: record.total_queries,
                min_gap: record.min_gap,
                final_gap: record.final_gap,
                final_dist_sq: record.final_dist_sq,
                wall_time_ms: if cfg.timing { elapsed } else { 0 },
            })
        })
        .collect::<HarnessResult<Vec<_>>>()?;

    let aggregate = Aggregate::from_rows(&rows, cfg.eps);
    write(&out.join("summary.csv"), &summary_csv(&rows))?;
    let summary = SummaryFile {
        config: cfg,
        base_seed,
        total_budget: prepared.plan.total_budget(),
        aggregate,
        trials: &rows,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    write(&out.join("summary.json"), &(json + "\n"))?;
    Ok(ExperimentOutcome {
        rows,
        aggregate,
        output: out,
    })
}
