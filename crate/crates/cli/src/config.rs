//! Declarative experiment description.

use std::fs;
use std::path::{Path, PathBuf};

use duelgrad::geometry::ConvexDomain;
use duelgrad::solver::{
    tune_epoch, tune_linear, tune_sign, tune_smooth, ProblemScale, Tuning, DEFAULT_CTILDE, DEFAULT_C_SIGN,
};
use duelgrad::{BallDomain, EpochSchedule, Objective, Quadratic, Recording, TransferFunction, Vector};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rgd,
    Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningKind {
    /// Smooth-convex formulas for the transfer's proxy; the epoch schedule for epoch runs.
    Theorem,
    Linear,
    Sign,
    Manual,
}

/// `kind` plus the three manual parameters, which only `manual` reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    pub kind: TuningKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl TuningSpec {
    pub fn of(kind: TuningKind) -> Self {
        Self {
            kind,
            eta: None,
            gamma: None,
            budget: None,
        }
    }
}

/// `f(w) = ½ (w - w*)ᵀ diag(λ) (w - w*)` on a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Quadratic {
        eigenvalues: Vec<f64>,
        minimizer: Vec<f64>,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    pub transfer: TransferFunction,
    pub algorithm: Algorithm,
    pub tuning: TuningSpec,
    pub eps: f64,
    pub trials: u64,
    /// `None` defers to `DUELGRAD_SEED`, then 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    /// Record every n-th iterate; `None` keeps about a thousand rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u64>,
    pub output: PathBuf,
    /// Defaults to the projection of `w* + radius·e₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_point: Option<Vec<f64>>,
    #[serde(default = "default_ctilde")]
    pub ctilde: f64,
    #[serde(default = "default_c_sign")]
    pub c_sign: f64,
    /// Fill `wall_time_ms`; off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn default_ctilde() -> f64 {
    DEFAULT_CTILDE
}

fn default_c_sign() -> f64 {
    DEFAULT_C_SIGN
}

impl Default for ExperimentConfig {
    /// Sign feedback on `½‖w‖²` over the unit disc, 50 trials at ε = 0.01.
    fn default() -> Self {
        Self {
            objective: ObjectiveSpec::Quadratic {
                eigenvalues: vec![1.0, 1.0],
                minimizer: vec![0.0, 0.0],
                radius: 1.0,
                center: None,
            },
            transfer: TransferFunction::Sign,
            algorithm: Algorithm::Rgd,
            tuning: TuningSpec::of(TuningKind::Sign),
            eps: 0.01,
            trials: 50,
            base_seed: None,
            record_stride: None,
            output: PathBuf::from("out"),
            initial_point: None,
            ctilde: DEFAULT_CTILDE,
            c_sign: DEFAULT_C_SIGN,
            timing: false,
        }
    }
}

/// Everything a trial needs, built once from a validated config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub objective: Quadratic,
    pub transfer: TransferFunction,
    pub w1: Vector,
    pub plan: Plan,
    pub recording: Recording,
}

#[derive(Debug, Clone)]
pub enum Plan {
    Single(Tuning),
    Epochs(EpochSchedule),
}

impl Plan {
    pub fn total_budget(&self) -> u64 {
        match self {
            Plan::Single(t) => t.budget,
            Plan::Epochs(s) => s.total_budget(),
        }
    }
}

fn vector(field: &str, coords: &[f64]) -> HarnessResult<Vector> {
    Vector::new(coords.to_vec()).map_err(|e| HarnessError::config(field, e.to_string()))
}

fn field_err(field: &str) -> impl Fn(duelgrad::Error) -> HarnessError + '_ {
    move |e| HarnessError::config(field, e.to_string())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn build_objective(&self) -> HarnessResult<Quadratic> {
        let ObjectiveSpec::Quadratic {
            eigenvalues,
            minimizer,
            radius,
            center,
        } = &self.objective;
        let star = vector("objective.minimizer", minimizer)?;
        if eigenvalues.len() != star.dim() {
            return Err(HarnessError::config(
                "objective.eigenvalues",
                format!("expected {} values, got {}", star.dim(), eigenvalues.len()),
            ));
        }
        let center = match center {
            Some(c) => vector("objective.center", c)?,
            None => Vector::zeros(star.dim()),
        };
        if center.dim() != star.dim() {
            return Err(HarnessError::config(
                "objective.center",
                "dimension differs from the minimizer",
            ));
        }
        let domain = BallDomain::new(center, *radius).map_err(field_err("objective.radius"))?;
        Quadratic::from_eigenvalues(eigenvalues, star, domain).map_err(field_err("objective"))
    }

    /// Checks every field and resolves tuning into concrete parameters.
    pub fn prepare(&self) -> HarnessResult<Prepared> {
        if self.trials == 0 {
            return Err(HarnessError::config("trials", "must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(HarnessError::config(
                "eps",
                format!("must be positive, got {}", self.eps),
            ));
        }
        if self.record_stride == Some(0) {
            return Err(HarnessError::config("record_stride", "must be at least 1"));
        }
        self.transfer.validate().map_err(field_err("transfer"))?;
        let objective = self.build_objective()?;
        let domain = objective.domain();
        let w1 = match &self.initial_point {
            Some(p) => vector("initial_point", p)?,
            None => {
                let e1 = Vector::basis(objective.dim(), 0);
                domain
                    .project(&objective.minimizer().add_scaled(domain.radius(), &e1))
                    .map_err(field_err("initial_point"))?
            }
        };
        if !domain.contains(&w1) {
            return Err(HarnessError::config("initial_point", "must lie in the domain"));
        }
        let plan = self.plan(&objective)?;
        let recording = match self.record_stride {
            None => Recording::Auto,
            Some(1) => Recording::Full,
            Some(n) => Recording::Stride(n),
        };
        Ok(Prepared {
            objective,
            transfer: self.transfer.clone(),
            w1,
            plan,
            recording,
        })
    }

    pub fn scale(&self, objective: &Quadratic) -> HarnessResult<ProblemScale> {
        ProblemScale::new(
            self.eps,
            objective.beta(),
            objective.dim(),
            objective.domain().diameter(),
        )
        .map_err(field_err("eps"))
    }

    fn plan(&self, objective: &Quadratic) -> HarnessResult<Plan> {
        let scale = self.scale(objective)?;
        let proxy = || self.transfer.natural_proxy().map_err(field_err("transfer"));
        match (self.algorithm, self.tuning.kind) {
            (Algorithm::Epoch, TuningKind::Theorem) => {
                let pp = proxy()?;
                let schedule =
                    tune_epoch(&scale, objective.alpha(), pp.p, pp.c_rho, self.ctilde).map_err(field_err("tuning"))?;
                if schedule.is_trivial() {
                    return Err(HarnessError::config(
                        "eps",
                        "trivial: every feasible point is ε-optimal, nothing to run",
                    ));
                }
                Ok(Plan::Epochs(schedule))
            }
            (Algorithm::Epoch, _) => Err(HarnessError::config("tuning.kind", "epoch runs need `theorem` tuning")),
            (Algorithm::Rgd, TuningKind::Theorem) => {
                let pp = proxy()?;
                Ok(Plan::Single(
                    tune_smooth(&scale, pp.p, pp.c_rho, self.ctilde).map_err(field_err("tuning"))?,
                ))
            }
            (Algorithm::Rgd, TuningKind::Linear) => {
                let pp = proxy()?;
                if pp.p != 1 {
                    return Err(HarnessError::config(
                        "tuning.kind",
                        "`linear` tuning needs a degree-1 transfer",
                    ));
                }
                Ok(Plan::Single(
                    tune_linear(&scale, pp.c_rho).map_err(field_err("tuning"))?,
                ))
            }
            (Algorithm::Rgd, TuningKind::Sign) => Ok(Plan::Single(
                tune_sign(&scale, self.c_sign).map_err(field_err("c_sign"))?,
            )),
            (Algorithm::Rgd, TuningKind::Manual) => {
                let missing = |name: &str| {
                    HarnessError::config(format!("tuning.{name}"), "manual tuning needs eta, gamma and budget")
                };
                let tuning = Tuning {
                    eta: self.tuning.eta.ok_or_else(|| missing("eta"))?,
                    gamma: self.tuning.gamma.ok_or_else(|| missing("gamma"))?,
                    budget: self.tuning.budget.ok_or_else(|| missing("budget"))?,
                };
                duelgrad::SolverConfig::from_tuning(&tuning, Vector::zeros(1)).map_err(field_err("tuning"))?;
                Ok(Plan::Single(tuning))
            }
        }
    }
}
