//! Named diagnostic suites with their default configurations.

use std::fmt;
use std::str::FromStr;

use duelgrad::diagnostics::{
    check_fkm_identity, descent_alignment, estimate_ctilde, roundwise_progress_check, scaled_gradient_estimate,
    EstimateReport, McConfig, Verdict,
};
use duelgrad::objectives::{
    builtin_quadratics, check_minimizer_bounds, check_smooth_convex, check_strong_smooth_coercivity, InequalityCheck,
};
use duelgrad::solver::{tune_linear, ProblemScale};
use duelgrad::{derived_rng, BallDomain, Objective, Quadratic, TransferFunction, Vector};
use rand::Rng;
use serde::Serialize;

use crate::error::{HarnessError, HarnessResult};

pub const CTILDE_DIMS: [usize; 7] = [1, 2, 3, 5, 10, 50, 200];
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ctilde,
    Fkm,
    Alignment,
    Progress,
    ScaledGradient,
    Objectives,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = [
        "ctilde",
        "fkm",
        "alignment",
        "progress",
        "scaled-gradient",
        "objectives",
        "all",
    ];

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Ctilde,
                Suite::Fkm,
                Suite::Alignment,
                Suite::Progress,
                Suite::ScaledGradient,
                Suite::Objectives,
            ],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        Ok(match s {
            "ctilde" => Suite::Ctilde,
            "fkm" => Suite::Fkm,
            "alignment" => Suite::Alignment,
            "progress" => Suite::Progress,
            "scaled-gradient" => Suite::ScaledGradient,
            "objectives" => Suite::Objectives,
            "all" => Suite::All,
            other => {
                return Err(HarnessError::config(
                    "suite",
                    format!("unknown suite `{other}`; expected one of {}", Suite::NAMES.join(", ")),
                ))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Ctilde => "ctilde",
            Suite::Fkm => "fkm",
            Suite::Alignment => "alignment",
            Suite::Progress => "progress",
            Suite::ScaledGradient => "scaled-gradient",
            Suite::Objectives => "objectives",
            Suite::All => "all",
        })
    }
}

/// One brute-force inequality check on a built-in objective.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub samples: usize,
    pub max_violation: f64,
    pub failures: usize,
    pub verdict: Verdict,
}

impl InequalityReport {
    fn new(objective: &str, check: &str, c: InequalityCheck) -> Self {
        Self {
            name: format!("{objective}/{check}"),
            samples: c.samples,
            max_violation: c.max_violation,
            failures: c.failures,
            verdict: if c.passed() { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub suite: Suite,
    pub seed: u64,
    pub samples: u64,
    pub passed: usize,
    pub failed: usize,
    pub reports: Vec<EstimateReport>,
    pub inequalities: Vec<InequalityReport>,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

struct Runner {
    seed: u64,
    samples: u64,
    next: u64,
    reports: Vec<EstimateReport>,
    inequalities: Vec<InequalityReport>,
}

impl Runner {
    /// Each check gets its own seed so suites are reproducible in isolation.
    fn mc(&mut self) -> McConfig {
        self.next += 1;
        McConfig::new(self.samples, self.seed.wrapping_add(self.next))
    }

    fn ctilde(&mut self) -> HarnessResult<()> {
        for d in CTILDE_DIMS {
            let cfg = self.mc();
            self.reports.push(estimate_ctilde(d, &cfg)?);
        }
        Ok(())
    }

    fn fkm(&mut self) -> HarnessResult<()> {
        let cfg = self.mc();
        self.reports.push(check_fkm_identity(&vec_of(&[1.0, 2.0, 3.0]), &cfg)?);
        let cfg = self.mc();
        self.reports.push(check_fkm_identity(&Vector::basis(2, 0), &cfg)?);
        let mut rng = derived_rng(self.seed, u64::MAX);
        for d in [2usize, 3, 10] {
            for _ in 0..20 {
                let a = vec_of(&(0..d).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
                let cfg = self.mc();
                self.reports.push(check_fkm_identity(&a, &cfg)?);
            }
        }
        Ok(())
    }

    fn alignment(&mut self) -> HarnessResult<()> {
        let f = identity_2d();
        let w = vec_of(&[1.0, 0.0]);
        let cfg = self.mc();
        self.reports
            .push(descent_alignment(&w, &f, &TransferFunction::linear(1.0)?, 0.1, &cfg)?);
        let cfg = self.mc();
        self.reports
            .push(descent_alignment(&w, &f, &TransferFunction::Sign, 1e-4, &cfg)?);
        let cfg = self.mc();
        self.reports
            .push(descent_alignment(&w, &f, &TransferFunction::sigmoid(2.0)?, 0.05, &cfg)?);
        Ok(())
    }

    fn progress(&mut self) -> HarnessResult<()> {
        let f = identity_2d();
        // Linear transfer at ε = 0.4, where the predicted decrement is well above resolution.
        let tuning = tune_linear(&ProblemScale::new(0.4, 1.0, 2, 4.0)?, 1.0)?;
        let cfg = self.mc();
        self.reports.push(roundwise_progress_check(
            &vec_of(&[1.0, 0.0]),
            tuning.eta,
            tuning.gamma,
            &f,
            &TransferFunction::linear(1.0)?,
            f.domain(),
            &cfg,
        )?);
        let cfg = self.mc();
        self.reports.push(roundwise_progress_check(
            &vec_of(&[0.8, -0.6]),
            0.01,
            0.01,
            &f,
            &TransferFunction::Sign,
            f.domain(),
            &cfg,
        )?);
        Ok(())
    }

    fn scaled_gradient(&mut self) -> HarnessResult<()> {
        let f = Quadratic::from_eigenvalues(&[2.0, 0.5], Vector::zeros(2), BallDomain::centered(2, 2.0)?)?;
        let w = vec_of(&[0.7, 0.9]);
        for (tf, gamma) in [(TransferFunction::Sign, 1e-3), (TransferFunction::linear(1.0)?, 0.05)] {
            let cfg = self.mc();
            self.reports.push(scaled_gradient_estimate(&w, &f, &tf, gamma, &cfg)?);
        }
        Ok(())
    }

    fn objectives(&mut self) -> HarnessResult<()> {
        let pairs = DEFAULT_PAIRS;
        for (name, f) in builtin_quadratics() {
            self.next += 1;
            let mut rng = derived_rng(self.seed.wrapping_add(self.next), 0);
            let sc = check_smooth_convex(&f, pairs, &mut rng);
            self.inequalities
                .push(InequalityReport::new(name, "convexity", sc.convexity));
            self.inequalities
                .push(InequalityReport::new(name, "smoothness", sc.smoothness));
            self.inequalities
                .push(InequalityReport::new(name, "strong_convexity", sc.strong_convexity));
            if f.alpha() > 0.0 {
                let c = check_strong_smooth_coercivity(&f, pairs, &mut rng)?;
                self.inequalities.push(InequalityReport::new(name, "coercivity", c));
            }
            let m = check_minimizer_bounds(&f, pairs, &mut rng);
            self.inequalities
                .push(InequalityReport::new(name, "optimality", m.optimality));
            self.inequalities
                .push(InequalityReport::new(name, "gradient_by_gap", m.gradient_by_gap));
            self.inequalities
                .push(InequalityReport::new(name, "gap_by_distance", m.gap_by_distance));
            self.inequalities
                .push(InequalityReport::new(name, "first_order", m.first_order));
            if let Some(c) = m.gap_lower {
                self.inequalities.push(InequalityReport::new(name, "gap_lower", c));
            }
            if let Some(c) = m.gradient_lower {
                self.inequalities.push(InequalityReport::new(name, "gradient_lower", c));
            }
        }
        Ok(())
    }
}

fn vec_of(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).expect("finite coordinates")
}

fn identity_2d() -> Quadratic {
    Quadratic::from_eigenvalues(
        &[1.0, 1.0],
        Vector::zeros(2),
        BallDomain::centered(2, 2.0).expect("radius"),
    )
    .expect("valid quadratic")
}

/// Runs `suite` with `samples` Monte Carlo draws per check.
///
/// Returns the report even when checks fail; callers decide the exit status.
pub fn run_diagnostics(suite: Suite, seed: u64, samples: u64) -> HarnessResult<DiagnosticsReport> {
    let mut runner = Runner {
        seed,
        samples,
        next: 0,
        reports: Vec::new(),
        inequalities: Vec::new(),
    };
    for s in suite.members() {
        match s {
            Suite::Ctilde => runner.ctilde()?,
            Suite::Fkm => runner.fkm()?,
            Suite::Alignment => runner.alignment()?,
            Suite::Progress => runner.progress()?,
            Suite::ScaledGradient => runner.scaled_gradient()?,
            Suite::Objectives => runner.objectives()?,
            Suite::All => unreachable!("expanded above"),
        }
    }
    let verdicts = runner
        .reports
        .iter()
        .map(|r| r.verdict)
        .chain(runner.inequalities.iter().map(|r| r.verdict));
    let failed = verdicts.clone().filter(|v| *v == Verdict::Fail).count();
    Ok(DiagnosticsReport {
        suite,
        seed,
        samples,
        passed: verdicts.count() - failed,
        failed,
        reports: runner.reports,
        inequalities: runner.inequalities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        let err = "bogus".parse::<Suite>().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ctilde_suite_has_seven_passing_reports() {
        let report = run_diagnostics(Suite::Ctilde, 3, 20_000).unwrap();
        assert_eq!(report.reports.len(), 7);
        assert!(report.all_passed());
    }

    #[test]
    fn objectives_suite_passes() {
        let report = run_diagnostics(Suite::Objectives, 0, 0).unwrap();
        assert!(report.reports.is_empty());
        assert!(report.all_passed(), "{report:?}");
        assert!(report.inequalities.iter().all(|c| c.max_violation <= 1e-9));
    }
}
