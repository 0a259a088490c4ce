//! Test objectives with certified constants, plus sampling checkers for the
//! convexity, smoothness and strong-convexity inequalities.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{sample_unit_sphere, BallDomain, ConvexDomain, Vector};

/// Absolute slack for every inequality check in this module.
pub const INEQUALITY_SLACK: f64 = 1e-9;

const PSD_TOL: f64 = 1e-10;

/// A convex test function with known constants.
///
/// Solvers only ever see an objective through a comparison oracle; the
/// gradient and minimizer exist for instrumentation and diagnostics.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, w: &Vector) -> f64;
    fn gradient(&self, w: &Vector) -> Vector;
    /// Smoothness constant β.
    fn beta(&self) -> f64;
    /// Strong-convexity constant α (0 if merely convex).
    fn alpha(&self) -> f64;
    fn minimizer(&self) -> &Vector;
    fn domain(&self) -> &BallDomain;
    /// Lipschitz bound on the region queried by the solver.
    fn lipschitz(&self) -> f64;

    fn min_value(&self) -> f64 {
        self.value(self.minimizer())
    }

    /// Suboptimality gap `f(w) - f(w*)`.
    fn gap(&self, w: &Vector) -> f64 {
        self.value(w) - self.min_value()
    }
}

/// `f(w) = ½ (w - w*)ᵀ A (w - w*)` for a symmetric PSD matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    dim: usize,
    /// Row-major `dim × dim`.
    matrix: Vec<f64>,
    minimizer: Vector,
    domain: BallDomain,
    beta: f64,
    alpha: f64,
    query_margin: f64,
}

impl Quadratic {
    /// Builds the quadratic and reads β and α off the extreme eigenvalues of `A`.
    pub fn new(matrix: &[Vec<f64>], minimizer: Vector, domain: BallDomain) -> Result<Self> {
        let dim = minimizer.dim();
        if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
            return Err(invalid("matrix", format!("must be {dim} x {dim}")));
        }
        if domain.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: domain.dim(),
            });
        }
        let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
        if flat.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let scale = flat.iter().fold(1.0_f64, |m, a| m.max(a.abs()));
        for i in 0..dim {
            for j in 0..i {
                if (flat[i * dim + j] - flat[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(invalid("matrix", "must be symmetric"));
                }
            }
        }
        let eigen = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &flat));
        let lo = eigen.eigenvalues.min();
        let hi = eigen.eigenvalues.max();
        if lo < -PSD_TOL {
            return Err(Error::NotPsd(lo));
        }
        if !(hi > 0.0) {
            return Err(invalid("matrix", "must have a positive eigenvalue"));
        }
        if !domain.contains(&minimizer) {
            return Err(invalid("minimizer", "must lie in the domain"));
        }
        Ok(Self {
            dim,
            matrix: flat,
            minimizer,
            domain,
            beta: hi,
            alpha: lo.max(0.0),
            query_margin: 0.0,
        })
    }

    /// Diagonal quadratic with the given Hessian eigenvalues.
    pub fn from_eigenvalues(eigenvalues: &[f64], minimizer: Vector, domain: BallDomain) -> Result<Self> {
        let dim = eigenvalues.len();
        let matrix: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { eigenvalues[i] } else { 0.0 }).collect())
            .collect();
        Self::new(&matrix, minimizer, domain)
    }

    /// Widens the Lipschitz region by `gamma_max` to cover perturbed queries
    /// just outside the domain: `L = β (D + γ_max)`.
    pub fn with_query_margin(mut self, gamma_max: f64) -> Self {
        self.query_margin = gamma_max.max(0.0);
        self
    }

    /// Overrides the certified constants. Used to check that the property
    /// checkers catch wrong claims.
    pub fn with_claimed_constants(mut self, beta: f64, alpha: f64) -> Self {
        self.beta = beta;
        self.alpha = alpha;
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    fn apply(&self, x: &Vector) -> Vector {
        let coords = self
            .matrix
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        Vector::new(coords).expect("finite matrix times finite vector")
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &Vector) -> f64 {
        let offset = w - &self.minimizer;
        0.5 * offset.dot(&self.apply(&offset))
    }

    fn gradient(&self, w: &Vector) -> Vector {
        self.apply(&(w - &self.minimizer))
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn minimizer(&self) -> &Vector {
        &self.minimizer
    }

    fn domain(&self) -> &BallDomain {
        &self.domain
    }

    fn lipschitz(&self) -> f64 {
        self.beta * (self.domain.diameter() + self.query_margin)
    }

    fn min_value(&self) -> f64 {
        0.0
    }
}

/// The quadratics the property suite certifies.
pub fn builtin_quadratics() -> Vec<(&'static str, Quadratic)> {
    let v = |c: &[f64]| Vector::new(c.to_vec()).expect("finite");
    let ball = |d, r| BallDomain::centered(d, r).expect("positive radius");
    // A = Q diag(3, 1, 0.25) Qᵀ with Q the Householder reflection along (1, 1, 1)/√3
    let eig = [3.0, 1.0, 0.25];
    let h = |i: usize, j: usize| (if i == j { 1.0 } else { 0.0 }) - 2.0 / 3.0;
    let rotated: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| (0..3).map(|k| h(i, k) * eig[k] * h(j, k)).sum())
                .collect()
        })
        .collect();
    // symmetrize rounding noise
    let rotated: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| 0.5 * (rotated[i][j] + rotated[j][i])).collect())
        .collect();
    vec![
        (
            "identity_2d",
            Quadratic::from_eigenvalues(&[1.0, 1.0], v(&[0.0, 0.0]), ball(2, 1.0)).expect("valid"),
        ),
        (
            "diag_4_1",
            Quadratic::from_eigenvalues(&[4.0, 1.0], v(&[0.1, -0.2]), ball(2, 1.0)).expect("valid"),
        ),
        (
            "diag_1_0",
            Quadratic::from_eigenvalues(&[1.0, 0.0], v(&[0.0, 0.0]), ball(2, 1.0)).expect("valid"),
        ),
        (
            "rotated_3d",
            Quadratic::new(&rotated, v(&[0.2, 0.0, -0.3]), ball(3, 1.5)).expect("valid"),
        ),
    ]
}

/// Largest violation observed for one inequality over a set of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub samples: usize,
    /// Largest amount by which the inequality failed (0 if it always held).
    pub max_violation: f64,
    /// Samples whose violation exceeded the slack.
    pub failures: usize,
}

impl InequalityCheck {
    fn new() -> Self {
        Self {
            samples: 0,
            max_violation: 0.0,
            failures: 0,
        }
    }

    /// Records `lhs ≤ rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        let violation = lhs - rhs;
        self.samples += 1;
        if violation > INEQUALITY_SLACK {
            self.failures += 1;
        }
        self.max_violation = self.max_violation.max(violation);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothConvexReport {
    /// `f(x) - f(y) ≥ ∇f(y)ᵀ(x - y)`
    pub convexity: InequalityCheck,
    /// `f(x) - f(y) ≤ ∇f(y)ᵀ(x - y) + (β/2)‖x - y‖²`
    pub smoothness: InequalityCheck,
    /// `f(x) - f(y) ≥ ∇f(y)ᵀ(x - y) + (α/2)‖x - y‖²`
    pub strong_convexity: InequalityCheck,
}

impl SmoothConvexReport {
    pub fn passed(&self) -> bool {
        self.convexity.passed() && self.smoothness.passed() && self.strong_convexity.passed()
    }

    pub fn max_violation(&self) -> f64 {
        self.convexity
            .max_violation
            .max(self.smoothness.max_violation)
            .max(self.strong_convexity.max_violation)
    }
}

/// Uniform point in a ball.
pub fn sample_in_ball<R: Rng + ?Sized>(domain: &BallDomain, rng: &mut R) -> Vector {
    let d = domain.dim();
    let u = sample_unit_sphere(d, rng).expect("domain dimension is positive");
    let radius = domain.radius() * rng.random::<f64>().powf(1.0 / d as f64);
    domain.center().add_scaled(radius, &u)
}

fn random_pairs<'r, R: Rng + ?Sized>(
    domain: &'r BallDomain,
    trials: usize,
    rng: &'r mut R,
) -> impl Iterator<Item = (Vector, Vector)> + 'r {
    (0..trials).map(move |_| (sample_in_ball(domain, rng), sample_in_ball(domain, rng)))
}

pub fn check_smooth_convex_on<O: Objective + ?Sized>(
    obj: &O,
    pairs: impl IntoIterator<Item = (Vector, Vector)>,
) -> SmoothConvexReport {
    let mut report = SmoothConvexReport {
        convexity: InequalityCheck::new(),
        smoothness: InequalityCheck::new(),
        strong_convexity: InequalityCheck::new(),
    };
    for (x, y) in pairs {
        let diff = obj.value(&x) - obj.value(&y);
        let step = &x - &y;
        let linear = obj.gradient(&y).dot(&step);
        let sq = step.norm_sq();
        report.convexity.le(linear, diff);
        report.smoothness.le(diff, linear + 0.5 * obj.beta() * sq);
        report.strong_convexity.le(linear + 0.5 * obj.alpha() * sq, diff);
    }
    report
}

/// Samples `trials` pairs in the domain and checks the first-order convexity,
/// β-smoothness and α-strong-convexity inequalities.
pub fn check_smooth_convex<O: Objective + ?Sized, R: Rng + ?Sized>(
    obj: &O,
    trials: usize,
    rng: &mut R,
) -> SmoothConvexReport {
    check_smooth_convex_on(obj, random_pairs(obj.domain(), trials, rng))
}

/// `(∇f(x) - ∇f(y))ᵀ(x - y) ≥ αβ/(α+β) ‖x - y‖² + 1/(α+β) ‖∇f(x) - ∇f(y)‖²`
pub fn check_strong_smooth_coercivity_on<O: Objective + ?Sized>(
    obj: &O,
    pairs: impl IntoIterator<Item = (Vector, Vector)>,
) -> Result<InequalityCheck> {
    let (alpha, beta) = (obj.alpha(), obj.beta());
    if !(alpha > 0.0) {
        return Err(Error::NotApplicable("coercivity needs α > 0"));
    }
    let mut check = InequalityCheck::new();
    for (x, y) in pairs {
        let step = &x - &y;
        let grad_diff = &obj.gradient(&x) - &obj.gradient(&y);
        let lhs = grad_diff.dot(&step);
        let rhs = alpha * beta / (alpha + beta) * step.norm_sq() + grad_diff.norm_sq() / (alpha + beta);
        check.le(rhs, lhs);
    }
    Ok(check)
}

pub fn check_strong_smooth_coercivity<O: Objective + ?Sized, R: Rng + ?Sized>(
    obj: &O,
    trials: usize,
    rng: &mut R,
) -> Result<InequalityCheck> {
    check_strong_smooth_coercivity_on(obj, random_pairs(obj.domain(), trials, rng))
}

/// Consequences of smoothness and strong convexity measured against the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizerReport {
    /// `f(x*) ≤ f(x)`
    pub optimality: InequalityCheck,
    /// `‖∇f(x)‖² ≤ 2β (f(x) - f(x*))`
    pub gradient_by_gap: InequalityCheck,
    /// `f(x) - f(x*) ≤ (β/2)‖x - x*‖²`
    pub gap_by_distance: InequalityCheck,
    /// `∇f(x*)ᵀ(y - x*) ≥ 0`
    pub first_order: InequalityCheck,
    /// `(α/2)‖x - x*‖² ≤ f(x) - f(x*)`; `None` when α = 0.
    pub gap_lower: Option<InequalityCheck>,
    /// `α‖x - x*‖ ≤ ‖∇f(x)‖`; `None` when α = 0.
    pub gradient_lower: Option<InequalityCheck>,
}

impl MinimizerReport {
    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed())
    }

    pub fn max_violation(&self) -> f64 {
        self.checks().iter().map(|c| c.max_violation).fold(0.0, f64::max)
    }

    fn checks(&self) -> Vec<InequalityCheck> {
        let mut all = vec![
            self.optimality,
            self.gradient_by_gap,
            self.gap_by_distance,
            self.first_order,
        ];
        all.extend(self.gap_lower);
        all.extend(self.gradient_lower);
        all
    }
}

pub fn check_minimizer_bounds<O: Objective + ?Sized, R: Rng + ?Sized>(
    obj: &O,
    trials: usize,
    rng: &mut R,
) -> MinimizerReport {
    let (alpha, beta) = (obj.alpha(), obj.beta());
    let star = obj.minimizer();
    let f_star = obj.value(star);
    let grad_star = obj.gradient(star);
    let strong = alpha > 0.0;
    let mut report = MinimizerReport {
        optimality: InequalityCheck::new(),
        gradient_by_gap: InequalityCheck::new(),
        gap_by_distance: InequalityCheck::new(),
        first_order: InequalityCheck::new(),
        gap_lower: strong.then(InequalityCheck::new),
        gradient_lower: strong.then(InequalityCheck::new),
    };
    for _ in 0..trials {
        let x = sample_in_ball(obj.domain(), rng);
        let gap = obj.value(&x) - f_star;
        let grad = obj.gradient(&x);
        let dist_sq = x.dist_sq(star);
        report.optimality.le(f_star, obj.value(&x));
        report.gradient_by_gap.le(grad.norm_sq(), 2.0 * beta * gap);
        report.gap_by_distance.le(gap, 0.5 * beta * dist_sq);
        report.first_order.le(0.0, grad_star.dot(&(&x - star)));
        if let Some(check) = report.gap_lower.as_mut() {
            check.le(0.5 * alpha * dist_sq, gap);
        }
        if let Some(check) = report.gradient_lower.as_mut() {
            check.le(alpha * dist_sq.sqrt(), grad.norm());
        }
    }
    report
}
