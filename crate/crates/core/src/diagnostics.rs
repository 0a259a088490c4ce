//! Monte Carlo checks of the expectation identities and per-round
//! inequalities behind the descent method.
//!
//! Every kernel splits its samples into a fixed number of batches. Batch `b`
//! draws directions from stream `2b` and comparison outcomes from stream
//! `2b + 1` of the configured seed, and batch sums are combined in batch order
//! with compensated summation. Reports are therefore bit-for-bit reproducible
//! regardless of how many threads execute the batches.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{sample_unit_sphere, ConvexDomain, Vector};
use crate::objectives::Objective;
use crate::oracle::ComparisonOracle;
use crate::solver::{rgd_step_with_direction, DEFAULT_CTILDE};
use crate::transfer::TransferFunction;
use crate::{derived_rng, SeededRng};

pub const DEFAULT_Z: f64 = 4.0;
pub const DEFAULT_BATCHES: usize = 64;

/// Sample size, seed and pass/fail band for a Monte Carlo check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Width of the acceptance band in standard errors.
    pub z: f64,
    pub batches: usize,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            z: DEFAULT_Z,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Estimate {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Estimate {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Estimate::Scalar(x) => Some(*x),
            Estimate::Vector(_) => None,
        }
    }

    pub fn coords(&self) -> &[f64] {
        match self {
            Estimate::Scalar(x) => std::slice::from_ref(x),
            Estimate::Vector(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: Estimate,
    /// Sample standard deviation over `√n` (largest coordinate for vectors).
    pub std_error: f64,
    pub n: u64,
    pub target: Option<Estimate>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone)]
struct Sums {
    count: u64,
    first: Vec<KahanSum>,
    second: Vec<KahanSum>,
}

impl Sums {
    fn new(width: usize) -> Self {
        Self {
            count: 0,
            first: vec![KahanSum::default(); width],
            second: vec![KahanSum::default(); width],
        }
    }

    fn push(&mut self, values: &[f64]) {
        self.count += 1;
        for ((s1, s2), &x) in self.first.iter_mut().zip(self.second.iter_mut()).zip(values) {
            s1.add(x);
            s2.add(x * x);
        }
    }
}

/// Per-column sample means and standard errors.
#[derive(Debug, Clone)]
struct Moments {
    n: u64,
    mean: Vec<f64>,
    std_error: Vec<f64>,
}

fn simulate<F, S>(cfg: &McConfig, width: usize, init: F) -> Result<Moments>
where
    F: Fn(SeededRng, SeededRng) -> S + Sync,
    S: FnMut(&mut [f64]) -> Result<()>,
{
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "need at least two samples".into(),
        });
    }
    let batches = cfg.batches.max(1) as u64;
    let base = cfg.samples / batches;
    let extra = cfg.samples % batches;
    let per_batch: Vec<Result<Sums>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = base + u64::from(b < extra);
            let mut sums = Sums::new(width);
            let mut sampler = init(derived_rng(cfg.seed, 2 * b), derived_rng(cfg.seed, 2 * b + 1));
            let mut buf = vec![0.0; width];
            for _ in 0..count {
                sampler(&mut buf)?;
                sums.push(&buf);
            }
            Ok(sums)
        })
        .collect();
    let mut total_first = vec![KahanSum::default(); width];
    let mut total_second = vec![KahanSum::default(); width];
    let mut n = 0;
    for sums in per_batch {
        let sums = sums?;
        n += sums.count;
        for i in 0..width {
            total_first[i].add(sums.first[i].sum);
            total_second[i].add(sums.second[i].sum);
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = total_first.iter().map(|s| s.sum / nf).collect();
    let std_error = mean
        .iter()
        .zip(&total_second)
        .map(|(m, s2)| {
            let var = ((s2.sum - nf * m * m) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    Ok(Moments { n, mean, std_error })
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Estimates `c̃_d = √d · E|u₁|` for `u` uniform on the unit sphere.
///
/// Passes when the `3σ` interval around the estimate sits inside
/// `[1/20 - 3σ, 1 + 3σ]`.
pub fn estimate_ctilde(dim: usize, cfg: &McConfig) -> Result<EstimateReport> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let scale = (dim as f64).sqrt();
    let moments = simulate(cfg, 1, |mut dir, _| {
        move |out: &mut [f64]| {
            let u = sample_unit_sphere(dim, &mut dir)?;
            out[0] = scale * u[0].abs();
            Ok(())
        }
    })?;
    let estimate = moments.mean[0];
    let se = moments.std_error[0];
    let tol = 3.0 * se;
    let (lo, hi) = (DEFAULT_CTILDE, 1.0);
    let inside = estimate - tol >= lo - tol && estimate + tol <= hi + tol;
    Ok(EstimateReport {
        name: format!("ctilde_d{dim}"),
        estimate: Estimate::Scalar(estimate),
        std_error: se,
        n: moments.n,
        target: None,
        verdict: Verdict::from_bool(inside),
        details: BTreeMap::from([("lower".into(), lo), ("upper".into(), hi), ("dim".into(), dim as f64)]),
    })
}

/// Checks `E[(a·u) u] = a/d` for the linear test function `g(u) = a·u`.
pub fn check_fkm_identity(a: &Vector, cfg: &McConfig) -> Result<EstimateReport> {
    let dim = a.dim();
    let moments = simulate(cfg, dim, |mut dir, _| {
        move |out: &mut [f64]| {
            let u = sample_unit_sphere(dim, &mut dir)?;
            let projection = a.dot(&u);
            for (o, ui) in out.iter_mut().zip(u.as_slice()) {
                *o = projection * ui;
            }
            Ok(())
        }
    })?;
    let target: Vec<f64> = a.as_slice().iter().map(|x| x / dim as f64).collect();
    let errors: Vec<f64> = moments.mean.iter().zip(&target).map(|(m, t)| (m - t).abs()).collect();
    let ok = errors.iter().zip(&moments.std_error).all(|(e, se)| *e <= cfg.z * se);
    Ok(EstimateReport {
        name: format!("fkm_d{dim}"),
        std_error: max_of(&moments.std_error),
        estimate: Estimate::Vector(moments.mean),
        n: moments.n,
        target: Some(Estimate::Vector(target)),
        verdict: Verdict::from_bool(ok),
        details: BTreeMap::from([("max_abs_error".into(), max_of(&errors))]),
    })
}

fn linear_slope(transfer: &TransferFunction) -> Option<f64> {
    match transfer {
        TransferFunction::Linear { c_rho } => Some(*c_rho),
        _ => None,
    }
}

/// Closed-form lower bound `(2γ/d) c_ρ (gap - βγ²)` on `E[o u·(w - w*)]` for
/// an unclamped linear transfer.
pub fn linear_alignment_bound(dim: usize, gamma: f64, c_rho: f64, gap: f64, beta: f64) -> f64 {
    2.0 * gamma / dim as f64 * c_rho * (gap - beta * gamma * gamma)
}

/// Estimates `E[o u·(w - w*)]` at a fixed `w` over fresh directions and duels.
///
/// For a linear transfer the estimate must clear the closed-form bound within
/// the band; otherwise it must be positive with significance.
pub fn descent_alignment<O: Objective + ?Sized>(
    w: &Vector,
    objective: &O,
    transfer: &TransferFunction,
    gamma: f64,
    cfg: &McConfig,
) -> Result<EstimateReport> {
    let dim = objective.dim();
    w.check_dim(dim)?;
    let offset = w - objective.minimizer();
    let moments = simulate(cfg, 1, |mut dir, aux| {
        let mut oracle = ComparisonOracle::new(objective, transfer, aux);
        let offset = &offset;
        move |out: &mut [f64]| {
            let u = sample_unit_sphere(dim, &mut dir)?;
            let o = oracle.duel(&w.add_scaled(gamma, &u), &w.add_scaled(-gamma, &u))?;
            out[0] = o.as_f64() * u.dot(offset);
            Ok(())
        }
    })?;
    let estimate = moments.mean[0];
    let se = moments.std_error[0];
    let gap = objective.gap(w);
    let mut details = BTreeMap::from([("gap".into(), gap), ("gamma".into(), gamma)]);
    let (target, ok) = match linear_slope(transfer) {
        Some(c_rho) => {
            let bound = linear_alignment_bound(dim, gamma, c_rho, gap, objective.beta());
            details.insert("bound".into(), bound);
            (Some(Estimate::Scalar(bound)), estimate >= bound - cfg.z * se)
        }
        None => (None, estimate > cfg.z * se),
    };
    Ok(EstimateReport {
        name: format!("alignment_{}", transfer.name()),
        estimate: Estimate::Scalar(estimate),
        std_error: se,
        n: moments.n,
        target,
        verdict: Verdict::from_bool(ok),
        details,
    })
}

/// Predicted one-step decrease `2η (2γ/d) c_ρ (gap - βγ²) - η²` of
/// `E‖w' - w*‖²` under an unclamped linear transfer.
pub fn linear_progress_decrement(dim: usize, eta: f64, gamma: f64, c_rho: f64, gap: f64, beta: f64) -> f64 {
    2.0 * eta * linear_alignment_bound(dim, gamma, c_rho, gap, beta) - eta * eta
}

/// Simulates one descent step from a fixed `w` many times and compares the
/// mean of `‖w' - w*‖²` with `‖w - w*‖²`.
#[allow(clippy::too_many_arguments)]
pub fn roundwise_progress_check<O: Objective + ?Sized, D: ConvexDomain + Sync + ?Sized>(
    w: &Vector,
    eta: f64,
    gamma: f64,
    objective: &O,
    transfer: &TransferFunction,
    domain: &D,
    cfg: &McConfig,
) -> Result<EstimateReport> {
    let dim = objective.dim();
    w.check_dim(dim)?;
    let star = objective.minimizer();
    let moments = simulate(cfg, 1, |mut dir, aux| {
        let mut oracle = ComparisonOracle::new(objective, transfer, aux);
        move |out: &mut [f64]| {
            let u = sample_unit_sphere(dim, &mut dir)?;
            let step = rgd_step_with_direction(w, u, eta, gamma, &mut oracle, domain)?;
            out[0] = step.w_next.dist_sq(star);
            Ok(())
        }
    })?;
    let estimate = moments.mean[0];
    let se = moments.std_error[0];
    let start = w.dist_sq(star);
    let gap = objective.gap(w);
    let band = cfg.z * se;
    let mut details = BTreeMap::from([
        ("start_dist_sq".into(), start),
        ("gap".into(), gap),
        ("observed_decrement".into(), start - estimate),
    ]);
    let mut ok = estimate <= start + band;
    let target = match linear_slope(transfer) {
        Some(c_rho) => {
            let decrement = linear_progress_decrement(dim, eta, gamma, c_rho, gap, objective.beta());
            details.insert("predicted_decrement".into(), decrement);
            ok &= estimate <= start - decrement + band;
            start - decrement
        }
        None => start,
    };
    Ok(EstimateReport {
        name: format!("progress_{}", transfer.name()),
        estimate: Estimate::Scalar(estimate),
        std_error: se,
        n: moments.n,
        target: Some(Estimate::Scalar(target)),
        verdict: Verdict::from_bool(ok),
        details,
    })
}

/// Estimates `E[o u]`, the degree-scaled gradient direction seen through
/// comparisons, and relates it to `∇f(w)`.
///
/// Reports the cosine with the gradient and `‖E[o u]‖ / ‖∇f(w)‖^p`. The
/// verdict requires the component along the gradient to be positive with
/// significance; at a stationary point it instead requires the estimate to be
/// zero within the band.
pub fn scaled_gradient_estimate<O: Objective + ?Sized>(
    w: &Vector,
    objective: &O,
    transfer: &TransferFunction,
    gamma: f64,
    cfg: &McConfig,
) -> Result<EstimateReport> {
    let dim = objective.dim();
    w.check_dim(dim)?;
    let grad = objective.gradient(w);
    let grad_norm = grad.norm();
    let unit_grad = if grad_norm > 0.0 {
        grad.scale(1.0 / grad_norm)
    } else {
        Vector::zeros(dim)
    };
    let moments = simulate(cfg, dim + 1, |mut dir, aux| {
        let mut oracle = ComparisonOracle::new(objective, transfer, aux);
        let unit_grad = &unit_grad;
        move |out: &mut [f64]| {
            let u = sample_unit_sphere(dim, &mut dir)?;
            let o = oracle
                .duel(&w.add_scaled(gamma, &u), &w.add_scaled(-gamma, &u))?
                .as_f64();
            for (slot, ui) in out.iter_mut().zip(u.as_slice()) {
                *slot = o * ui;
            }
            out[dim] = o * u.dot(unit_grad);
            Ok(())
        }
    })?;
    let estimate = &moments.mean[..dim];
    let se = &moments.std_error[..dim];
    let est_norm = estimate.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut details = BTreeMap::from([("gradient_norm".into(), grad_norm), ("estimate_norm".into(), est_norm)]);
    let (target, ok) = if grad_norm > 0.0 {
        let along = moments.mean[dim];
        let along_se = moments.std_error[dim];
        let p = transfer.natural_proxy().map(|pp| pp.p).unwrap_or(1);
        details.insert("cosine".into(), along / est_norm);
        details.insert("along_gradient".into(), along);
        details.insert("magnitude_ratio".into(), est_norm / grad_norm.powi(p as i32));
        (None, along > cfg.z * along_se)
    } else {
        let zero = estimate.iter().zip(se).all(|(m, s)| m.abs() <= cfg.z * s);
        (Some(Estimate::Vector(vec![0.0; dim])), zero)
    };
    Ok(EstimateReport {
        name: format!("scaled_gradient_{}", transfer.name()),
        estimate: Estimate::Vector(estimate.to_vec()),
        std_error: max_of(se),
        n: moments.n,
        target,
        verdict: Verdict::from_bool(ok),
        details,
    })
}
