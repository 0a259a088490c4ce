//! Printable tuning tables.

use std::fmt::Write as _;

use duelgrad::solver::{tune_epoch, tune_linear, tune_sign, tune_smooth, ProblemScale, Tuning};
use duelgrad::{EpochSchedule, Objective};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig, TuningKind};
use crate::error::{HarnessError, HarnessResult};

pub const TRIVIAL_MESSAGE: &str = "trivial: every feasible point is ε-optimal";

/// Problem and transfer constants a tuning formula consumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneRequest {
    pub algorithm: Algorithm,
    pub tuning: TuningKind,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    /// Diameter bound `D`.
    pub diameter: f64,
    pub p: u32,
    pub c_rho: f64,
    pub ctilde: f64,
    pub c_sign: f64,
}

impl TuneRequest {
    /// Reads the constants off an experiment: `β`, `α` from the eigenvalues,
    /// `D` as the domain diameter, `(p, c_ρ)` from the transfer's proxy.
    pub fn from_config(cfg: &ExperimentConfig) -> HarnessResult<Self> {
        let f = cfg.build_objective()?;
        let (p, c_rho) = match cfg.transfer.natural_proxy() {
            Ok(pp) => (pp.p, pp.c_rho),
            Err(e) => return Err(HarnessError::config("transfer", e.to_string())),
        };
        Ok(Self {
            algorithm: cfg.algorithm,
            tuning: cfg.tuning.kind,
            eps: cfg.eps,
            alpha: f.alpha(),
            beta: f.beta(),
            dim: f.dim(),
            diameter: cfg.scale(&f)?.diameter,
            p,
            c_rho,
            ctilde: cfg.ctilde,
            c_sign: cfg.c_sign,
        })
    }
}

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TuneResult {
    Single(Tuning),
    Epochs(EpochSchedule),
}

pub fn compute(req: &TuneRequest) -> HarnessResult<TuneResult> {
    let scale = ProblemScale::new(req.eps, req.beta, req.dim, req.diameter)?;
    Ok(match (req.algorithm, req.tuning) {
        (Algorithm::Epoch, TuningKind::Theorem) => {
            TuneResult::Epochs(tune_epoch(&scale, req.alpha, req.p, req.c_rho, req.ctilde)?)
        }
        (Algorithm::Epoch, _) => {
            return Err(HarnessError::config(
                "tuning",
                "epoch schedules come from `theorem` tuning",
            ))
        }
        (Algorithm::Rgd, TuningKind::Theorem) => TuneResult::Single(tune_smooth(&scale, req.p, req.c_rho, req.ctilde)?),
        (Algorithm::Rgd, TuningKind::Linear) => TuneResult::Single(tune_linear(&scale, req.c_rho)?),
        (Algorithm::Rgd, TuningKind::Sign) => TuneResult::Single(tune_sign(&scale, req.c_sign)?),
        (Algorithm::Rgd, TuningKind::Manual) => {
            return Err(HarnessError::config("tuning", "manual parameters need no tuning"))
        }
    })
}

pub fn render(result: &TuneResult) -> String {
    let mut out = String::new();
    match result {
        TuneResult::Single(t) => {
            let _ = writeln!(out, "gamma\t{}", sig12(t.gamma));
            let _ = writeln!(out, "eta\t{}", sig12(t.eta));
            let _ = writeln!(out, "T\t{}", t.budget);
        }
        TuneResult::Epochs(s) if s.is_trivial() => {
            let _ = writeln!(out, "{TRIVIAL_MESSAGE}");
        }
        TuneResult::Epochs(s) => {
            let _ = writeln!(out, "k_eps\t{}", s.k_eps);
            let _ = writeln!(out, "B\t{}", sig12(s.b));
            let _ = writeln!(out, "k\tD_k\teta_k\tgamma_k\tt_k");
            for e in &s.epochs {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    e.k,
                    sig12(e.diameter),
                    sig12(e.eta),
                    sig12(e.gamma),
                    e.budget
                );
            }
            let _ = writeln!(out, "sum_t_k\t{}", s.total_budget());
        }
    }
    out
}
