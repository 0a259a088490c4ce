//! Relative-gradient descent from comparison feedback, its epoch-restarted
//! variant for strongly convex objectives, and the parameter tunings.
//!
//! One step at iterate `w` samples a direction `u` uniformly on the unit
//! sphere, duels `w + γu` against `w - γu`, and moves to the projection of
//! `w - η o u`. The outcome `o` only tells which probe looked worse, so
//! `o u` estimates a (degree-scaled) gradient direction.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, require_positive, Error, Result};
use crate::geometry::{sample_unit_sphere, ConvexDomain, Vector};
use crate::objectives::Objective;
use crate::oracle::{ComparisonOracle, Outcome};

/// Lower end of the interval known to contain the sphere constant c̃.
pub const DEFAULT_CTILDE: f64 = 1.0 / 20.0;
/// Multiplier of `dDβ/ε` in the sign-feedback budget.
pub const DEFAULT_C_SIGN: f64 = 400.0;
/// Row target for [`Recording::Auto`].
pub const AUTO_ROWS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub eta: f64,
    pub gamma: f64,
    pub budget: u64,
    pub w1: Vector,
}

impl SolverConfig {
    pub fn new(eta: f64, gamma: f64, budget: u64, w1: Vector) -> Result<Self> {
        let cfg = Self { eta, gamma, budget, w1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("eta", self.eta)?;
        require_positive("gamma", self.gamma)?;
        if self.budget == 0 {
            return Err(Error::ZeroBudget);
        }
        Ok(())
    }

    pub fn from_tuning(tuning: &Tuning, w1: Vector) -> Result<Self> {
        Self::new(tuning.eta, tuning.gamma, tuning.budget, w1)
    }
}

/// Which iterates end up as trajectory rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recording {
    /// Every iterate.
    Full,
    /// Every `n`-th iterate.
    Stride(u64),
    /// Roughly [`AUTO_ROWS`] evenly spaced iterates.
    #[default]
    Auto,
}

impl Recording {
    fn stride(self, total_steps: u64) -> u64 {
        match self {
            Recording::Full => 1,
            Recording::Stride(n) => n.max(1),
            Recording::Auto => total_steps.div_ceil(AUTO_ROWS).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    /// Iterate index; `t = 1` is the starting point.
    pub t: u64,
    /// Oracle queries consumed before `w_t` was produced.
    pub queries: u64,
    pub gap: f64,
    pub dist_sq: f64,
    /// Minimum gap over every iterate up to `t`, recorded or not.
    pub running_min_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochSummary {
    pub k: usize,
    pub diameter: f64,
    pub eta: f64,
    pub gamma: f64,
    pub budget: u64,
    pub dist_sq_start: f64,
    pub dist_sq_end: f64,
    pub gap_end: f64,
    pub queries_end: u64,
}

/// Trajectory plus summary of one solver run.
///
/// Gaps and distances are computed from the known objective outside the
/// oracle and cost no queries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub rows: Vec<TrajectoryRow>,
    pub final_point: Vector,
    /// Minimum gap over all iterates `w_1 … w_{T+1}`.
    pub min_gap: f64,
    pub argmin_t: u64,
    pub total_queries: u64,
    pub final_gap: f64,
    pub final_dist_sq: f64,
    /// One entry per epoch for epoch runs, empty otherwise.
    pub epochs: Vec<EpochSummary>,
}

struct Tracer<'o, O: Objective + ?Sized> {
    objective: &'o O,
    stride: u64,
    rows: Vec<TrajectoryRow>,
    min_gap: f64,
    argmin_t: u64,
}

impl<'o, O: Objective + ?Sized> Tracer<'o, O> {
    fn new(objective: &'o O, stride: u64) -> Self {
        Self {
            objective,
            stride,
            rows: Vec::new(),
            min_gap: f64::INFINITY,
            argmin_t: 0,
        }
    }

    fn observe(&mut self, t: u64, queries: u64, w: &Vector, force: bool) {
        let gap = self.objective.gap(w);
        if gap < self.min_gap {
            self.min_gap = gap;
            self.argmin_t = t;
        }
        let recorded = self.rows.last().is_some_and(|r| r.t == t);
        if !recorded && (force || (t - 1).is_multiple_of(self.stride)) {
            self.rows.push(TrajectoryRow {
                t,
                queries,
                gap,
                dist_sq: w.dist_sq(self.objective.minimizer()),
                running_min_gap: self.min_gap,
            });
        }
    }

    fn finish(self, final_point: Vector, total_queries: u64, epochs: Vec<EpochSummary>) -> RunRecord {
        let final_gap = self.objective.gap(&final_point);
        let final_dist_sq = final_point.dist_sq(self.objective.minimizer());
        RunRecord {
            rows: self.rows,
            final_point,
            min_gap: self.min_gap,
            argmin_t: self.argmin_t,
            total_queries,
            final_gap,
            final_dist_sq,
            epochs,
        }
    }
}

/// Result of a single descent step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub w_next: Vector,
    pub outcome: Outcome,
    pub direction: Vector,
}

/// One step along a caller-supplied unit direction `u`.
pub fn rgd_step_with_direction<O, R, D>(
    w: &Vector,
    direction: Vector,
    eta: f64,
    gamma: f64,
    oracle: &mut ComparisonOracle<'_, O, R>,
    domain: &D,
) -> Result<StepOutcome>
where
    O: Objective + ?Sized,
    R: Rng,
    D: ConvexDomain + ?Sized,
{
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid("eta", format!("must be finite and non-negative, got {eta}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(
            "gamma",
            format!("must be finite and non-negative, got {gamma}"),
        ));
    }
    direction.check_dim(w.dim())?;
    let probe_plus = w.add_scaled(gamma, &direction);
    let probe_minus = w.add_scaled(-gamma, &direction);
    let outcome = oracle.duel(&probe_plus, &probe_minus)?;
    // w - η g with g = o u
    let stepped = w.add_scaled(-eta * outcome.as_f64(), &direction);
    let w_next = domain.project(&stepped)?;
    Ok(StepOutcome {
        w_next,
        outcome,
        direction,
    })
}

/// One step of relative-gradient descent; consumes exactly one query.
pub fn rgd_step<O, R, D, S>(
    w: &Vector,
    eta: f64,
    gamma: f64,
    oracle: &mut ComparisonOracle<'_, O, R>,
    domain: &D,
    rng: &mut S,
) -> Result<StepOutcome>
where
    O: Objective + ?Sized,
    R: Rng,
    D: ConvexDomain + ?Sized,
    S: Rng + ?Sized,
{
    let direction = sample_unit_sphere(w.dim(), rng)?;
    rgd_step_with_direction(w, direction, eta, gamma, oracle, domain)
}

#[allow(clippy::too_many_arguments)]
fn run_segment<O, R, D, S>(
    mut w: Vector,
    eta: f64,
    gamma: f64,
    steps: u64,
    t_offset: u64,
    oracle: &mut ComparisonOracle<'_, O, R>,
    domain: &D,
    rng: &mut S,
    tracer: &mut Tracer<'_, O>,
) -> Result<Vector>
where
    O: Objective + ?Sized,
    R: Rng,
    D: ConvexDomain + ?Sized,
    S: Rng + ?Sized,
{
    for i in 1..=steps {
        w = rgd_step(&w, eta, gamma, oracle, domain, rng)?.w_next;
        tracer.observe(t_offset + i + 1, oracle.query_count(), &w, i == steps);
    }
    Ok(w)
}

/// Runs `cfg.budget` steps from `cfg.w1`.
///
/// Rows always include `t = 1` and `t = T + 1`; the final iterate is returned
/// in [`RunRecord::final_point`].
pub fn rgd_run<O, R, D, S>(
    cfg: &SolverConfig,
    oracle: &mut ComparisonOracle<'_, O, R>,
    domain: &D,
    rng: &mut S,
    recording: Recording,
) -> Result<RunRecord>
where
    O: Objective + ?Sized,
    R: Rng,
    D: ConvexDomain + ?Sized,
    S: Rng + ?Sized,
{
    cfg.validate()?;
    cfg.w1.check_dim(domain.dim())?;
    if !domain.contains(&cfg.w1) {
        return Err(invalid("w1", "initial point must lie in the domain"));
    }
    let start_queries = oracle.query_count();
    let mut tracer = Tracer::new(oracle.objective(), recording.stride(cfg.budget));
    tracer.observe(1, start_queries, &cfg.w1, true);
    let w = run_segment(
        cfg.w1.clone(),
        cfg.eta,
        cfg.gamma,
        cfg.budget,
        0,
        oracle,
        domain,
        rng,
        &mut tracer,
    )?;
    Ok(tracer.finish(w, oracle.query_count() - start_queries, Vec::new()))
}

/// Per-epoch parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochParams {
    pub k: usize,
    /// Distance bound `D_k`.
    pub diameter: f64,
    pub eta: f64,
    pub gamma: f64,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSchedule {
    pub k_eps: u32,
    /// The composite constant scaling every step size and budget.
    pub b: f64,
    pub ctilde: f64,
    pub p: u32,
    pub epochs: Vec<EpochParams>,
}

impl EpochSchedule {
    /// True when `ε ≥ βD²/2`, i.e. every feasible point is already ε-optimal.
    pub fn is_trivial(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn total_budget(&self) -> u64 {
        self.epochs.iter().map(|e| e.budget).sum()
    }
}

/// Chains one relative-gradient-descent run per epoch, each warm-started from
/// the previous epoch's last iterate.
pub fn epoch_rgd_run<O, R, D, S>(
    schedule: &EpochSchedule,
    w1: &Vector,
    oracle: &mut ComparisonOracle<'_, O, R>,
    domain: &D,
    rng: &mut S,
    recording: Recording,
) -> Result<RunRecord>
where
    O: Objective + ?Sized,
    R: Rng,
    D: ConvexDomain + ?Sized,
    S: Rng + ?Sized,
{
    let first = schedule.epochs.first().ok_or(Error::EmptySchedule)?;
    w1.check_dim(domain.dim())?;
    if !domain.contains(w1) {
        return Err(invalid("w1", "initial point must lie in the domain"));
    }
    let objective = oracle.objective();
    if w1.dist(objective.minimizer()) > first.diameter {
        return Err(invalid("w1", "initial distance to the minimizer exceeds D"));
    }
    let start_queries = oracle.query_count();
    let mut tracer = Tracer::new(objective, recording.stride(schedule.total_budget()));
    tracer.observe(1, start_queries, w1, true);
    let mut w = w1.clone();
    let mut t_offset = 0;
    let mut summaries = Vec::with_capacity(schedule.epochs.len());
    for epoch in &schedule.epochs {
        let dist_sq_start = w.dist_sq(objective.minimizer());
        w = run_segment(
            w,
            epoch.eta,
            epoch.gamma,
            epoch.budget,
            t_offset,
            oracle,
            domain,
            rng,
            &mut tracer,
        )?;
        t_offset += epoch.budget;
        summaries.push(EpochSummary {
            k: epoch.k,
            diameter: epoch.diameter,
            eta: epoch.eta,
            gamma: epoch.gamma,
            budget: epoch.budget,
            dist_sq_start,
            dist_sq_end: w.dist_sq(objective.minimizer()),
            gap_end: objective.gap(&w),
            queries_end: oracle.query_count() - start_queries,
        });
    }
    Ok(tracer.finish(w, oracle.query_count() - start_queries, summaries))
}

/// Target accuracy and problem geometry shared by every tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemScale {
    pub eps: f64,
    pub beta: f64,
    pub dim: usize,
    pub diameter: f64,
}

impl ProblemScale {
    pub fn new(eps: f64, beta: f64, dim: usize, diameter: f64) -> Result<Self> {
        let scale = Self {
            eps,
            beta,
            dim,
            diameter,
        };
        scale.validate()?;
        Ok(scale)
    }

    fn validate(&self) -> Result<()> {
        require_positive("eps", self.eps)?;
        require_positive("beta", self.beta)?;
        require_positive("diameter", self.diameter)?;
        if self.dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(())
    }

    fn d(&self) -> f64 {
        self.dim as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuning {
    pub gamma: f64,
    pub eta: f64,
    pub budget: u64,
}

/// Ceiling that ignores floating-point noise just above an integer.
fn budget_ceil(x: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 || x >= u64::MAX as f64 {
        return Err(invalid("budget", format!("{x} is not representable")));
    }
    let nearest = x.round();
    let value = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok(value as u64)
}

/// Generic smooth-convex tuning for a degree-`p` proxy with scale `c_ρ`:
///
/// * `γ = c̃ε / (β√d D)`
/// * `η = p c_ρ c̃^{2p-1} ε^{2p} / (d^{(2p+1)/2} β^p D^{2p-1})`
/// * `T = ⌈d^{2p+1} β^{2p} D^{4p} / (p² (c̃^{2p-1} c_ρ)² ε^{4p})⌉ + 1`
pub fn tune_smooth(scale: &ProblemScale, p: u32, c_rho: f64, ctilde: f64) -> Result<Tuning> {
    scale.validate()?;
    if p == 0 {
        return Err(Error::UseSignTuning);
    }
    require_positive("c_rho", c_rho)?;
    require_positive("ctilde", ctilde)?;
    let ProblemScale {
        eps, beta, diameter, ..
    } = *scale;
    let d = scale.d();
    let pf = p as f64;
    let pi = p as i32;
    let c_pow = ctilde.powi(2 * pi - 1);
    let gamma = ctilde * eps / (beta * d.sqrt() * diameter);
    let eta = pf * c_rho * c_pow * eps.powi(2 * pi)
        / (d.powf((2.0 * pf + 1.0) / 2.0) * beta.powi(pi) * diameter.powi(2 * pi - 1));
    let steps = d.powi(2 * pi + 1) * beta.powi(2 * pi) * diameter.powi(4 * pi)
        / (pf * pf * (c_pow * c_rho).powi(2) * eps.powi(4 * pi));
    let budget = budget_ceil(steps)?
        .checked_add(1)
        .ok_or_else(|| invalid("budget", "overflow"))?;
    Ok(Tuning { gamma, eta, budget })
}

/// Linear-transfer tuning: `γ = √(ε/2β)`, `η = c_ρ ε^{3/2} / (d√(2β))`,
/// `T = ⌈2d²βD² / (c_ρ² ε³)⌉`.
pub fn tune_linear(scale: &ProblemScale, c_rho: f64) -> Result<Tuning> {
    scale.validate()?;
    require_positive("c_rho", c_rho)?;
    let ProblemScale {
        eps, beta, diameter, ..
    } = *scale;
    let d = scale.d();
    Ok(Tuning {
        gamma: (eps / (2.0 * beta)).sqrt(),
        eta: c_rho * eps.powf(1.5) / (d * (2.0 * beta).sqrt()),
        budget: budget_ceil(2.0 * d * d * beta * diameter * diameter / (c_rho * c_rho * eps.powi(3)))?,
    })
}

/// Sign-feedback tuning: `γ = ε/(10β√d D)`, `η = c̃ε/(√d β D)` with
/// `c̃ = 1/20`, and `T = ⌈C_sign · dDβ/ε⌉`.
pub fn tune_sign(scale: &ProblemScale, c_sign: f64) -> Result<Tuning> {
    scale.validate()?;
    require_positive("c_sign", c_sign)?;
    let ProblemScale {
        eps, beta, diameter, ..
    } = *scale;
    let d = scale.d();
    Ok(Tuning {
        gamma: eps / (10.0 * beta * d.sqrt() * diameter),
        eta: DEFAULT_CTILDE * eps / (d.sqrt() * beta * diameter),
        budget: budget_ceil(c_sign * d * diameter * beta / eps)?,
    })
}

/// `B = (2 c_ρ p / (α+β)) · (α²/4β)^p · c̃^{2p-1} / d^{(2p+1)/2}`
pub fn epoch_constant(alpha: f64, beta: f64, dim: usize, p: u32, c_rho: f64, ctilde: f64) -> f64 {
    let pf = p as f64;
    let pi = p as i32;
    (2.0 * c_rho * pf / (alpha + beta))
        * ((alpha * alpha / (4.0 * beta)).powi(pi) * ctilde.powi(2 * pi - 1)
            / (dim as f64).powf((2.0 * pf + 1.0) / 2.0))
}

/// Epoch count `k_ε = ⌈log_{4/3}(βD²/2ε)⌉`, or 0 when `ε ≥ βD²/2`.
pub fn epoch_count(scale: &ProblemScale) -> Result<u32> {
    scale.validate()?;
    let ratio = scale.beta * scale.diameter * scale.diameter / (2.0 * scale.eps);
    if ratio <= 1.0 {
        return Ok(0);
    }
    let k = budget_ceil(ratio.ln() / (4.0f64 / 3.0).ln())?;
    u32::try_from(k).map_err(|_| invalid("eps", "too many epochs"))
}

/// Epoch schedule: `D_1 = D`, `D_{k+1} = √(3/4) D_k`, `η_k = B D_k^{2p+1}`,
/// `γ_k = c̃ α D_k / (2β√d)`, `t_k = ⌈1 / (2B² (D_k²)^{2p})⌉`.
///
/// Returns an empty schedule when the problem is trivial (`ε ≥ βD²/2`).
pub fn tune_epoch(scale: &ProblemScale, alpha: f64, p: u32, c_rho: f64, ctilde: f64) -> Result<EpochSchedule> {
    scale.validate()?;
    if p == 0 {
        return Err(Error::UseSignTuning);
    }
    require_positive("alpha", alpha)?;
    require_positive("c_rho", c_rho)?;
    require_positive("ctilde", ctilde)?;
    if alpha > scale.beta {
        return Err(invalid("alpha", format!("α = {alpha} exceeds β = {}", scale.beta)));
    }
    let b = epoch_constant(alpha, scale.beta, scale.dim, p, c_rho, ctilde);
    let k_eps = epoch_count(scale)?;
    let pi = p as i32;
    let shrink = 0.75f64.sqrt();
    let mut diameter = scale.diameter;
    let mut epochs = Vec::with_capacity(k_eps as usize);
    for k in 1..=k_eps as usize {
        epochs.push(EpochParams {
            k,
            diameter,
            eta: b * diameter.powi(2 * pi + 1),
            gamma: ctilde * alpha * diameter / (2.0 * scale.beta * scale.d().sqrt()),
            budget: budget_ceil(1.0 / (2.0 * b * b * (diameter * diameter).powi(2 * pi)))?,
        });
        diameter *= shrink;
    }
    Ok(EpochSchedule {
        k_eps,
        b,
        ctilde,
        p,
        epochs,
    })
}

/// Closed-form total-budget bound `(1/(4B²(D²)^{2p})) ((βD²/2ε)^{2p} - 1)`.
pub fn epoch_budget_bound(scale: &ProblemScale, b: f64, p: u32) -> f64 {
    let pi = p as i32;
    let d_sq = scale.diameter * scale.diameter;
    let ratio = scale.beta * d_sq / (2.0 * scale.eps);
    (ratio.powi(2 * pi) - 1.0) / (4.0 * b * b * d_sq.powi(2 * pi))
}

/// Exact geometric sum `Σ_k 1/(2B²(D_k²)^{2p})` before rounding.
pub fn epoch_budget_exact(scale: &ProblemScale, b: f64, p: u32, k_eps: u32) -> f64 {
    let q = (4.0f64 / 3.0).powi(2 * p as i32);
    let d_sq = scale.diameter * scale.diameter;
    (q.powi(k_eps as i32) - 1.0) / (q - 1.0) / (2.0 * b * b * d_sq.powi(2 * p as i32))
}
