//! Transfer functions: the map from a value difference `f(x) - f(y)` to the
//! mean of the comparison outcome, together with their polynomial proxies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};

/// Absolute slack allowed when comparing a numerical derivative with the proxy bound.
pub const PROXY_BOUND_SLACK: f64 = 1e-8;

/// An anti-symmetric response curve `ρ: ℝ → [-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransferFunction {
    /// Noiseless comparisons: `ρ(x) = sign(x)`.
    Sign,
    /// `ρ(x) = c_ρ x`, clamped to `[-1, 1]`.
    Linear { c_rho: f64 },
    /// `ρ(x) = (1 - e^{-ωx}) / (1 + e^{-ωx})`.
    Sigmoid { omega: f64 },
    /// `ρ(x) = c_ρ sign(x) |x|^p`, clamped to `[-1, 1]`.
    PolyProxy { p: u32, c_rho: f64 },
    /// A power series around the origin, applied anti-symmetrically.
    Series(SeriesSpec),
}

/// The `p`-th order proxy `c_ρ sign(x)|x|^p` and the radius on which it
/// lower-bounds the derivative of its owning transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyParams {
    pub p: u32,
    pub c_rho: f64,
    pub r: f64,
}

/// Leading coefficients of a series `Σ a_n x^n`, its radius of convergence and
/// a uniform bound `M ≥ |n a_n|` on the coefficients past the leading one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub coefficients: BTreeMap<u32, f64>,
    pub radius: f64,
    #[serde(default)]
    pub tail_bound: f64,
}

/// Result of [`check_admissibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    /// Minimal degree with a non-zero coefficient.
    pub p: u32,
    /// `½ p a_p`: the certified derivative lower-bound constant.
    pub lower_const: f64,
    /// `min{δ, p a_p / 4M}` (just `δ` when `M = 0`).
    pub valid_radius: f64,
}

/// Result of [`verify_proxy_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxyBoundReport {
    pub holds: bool,
    /// Largest amount by which the proxy derivative exceeded the numerical `ρ'`.
    pub max_violation: f64,
    pub worst_x: f64,
    pub grid_points: usize,
}

impl SeriesSpec {
    pub fn new(coefficients: impl IntoIterator<Item = (u32, f64)>, radius: f64, tail_bound: f64) -> Self {
        Self {
            coefficients: coefficients.into_iter().collect(),
            radius,
            tail_bound,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(invalid("radius", "series radius must be positive"));
        }
        if !(self.tail_bound >= 0.0) || self.tail_bound.is_nan() {
            return Err(invalid("tail_bound", "must be non-negative"));
        }
        if self.coefficients.values().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("series coefficients"));
        }
        Ok(())
    }

    /// Truncated series value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        self.coefficients.iter().map(|(&n, &a)| a * x.powi(n as i32)).sum()
    }

    /// Exact derivative of the truncated series.
    pub fn derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .filter(|(&n, _)| n > 0)
            .map(|(&n, &a)| n as f64 * a * x.powi(n as i32 - 1))
            .sum()
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl TransferFunction {
    pub fn linear(c_rho: f64) -> Result<Self> {
        let tf = Self::Linear { c_rho };
        tf.validate()?;
        Ok(tf)
    }

    pub fn sigmoid(omega: f64) -> Result<Self> {
        let tf = Self::Sigmoid { omega };
        tf.validate()?;
        Ok(tf)
    }

    pub fn poly_proxy(p: u32, c_rho: f64) -> Result<Self> {
        let tf = Self::PolyProxy { p, c_rho };
        tf.validate()?;
        Ok(tf)
    }

    pub fn series(spec: SeriesSpec) -> Result<Self> {
        let tf = Self::Series(spec);
        tf.validate()?;
        Ok(tf)
    }

    /// Checks the kind-specific parameters; call after deserializing.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Sign => Ok(()),
            Self::Linear { c_rho } => require_positive("c_rho", *c_rho),
            Self::Sigmoid { omega } => require_positive("omega", *omega),
            Self::PolyProxy { p, c_rho } => {
                if *p == 0 {
                    return Err(invalid("p", "degree 0 is the sign transfer"));
                }
                require_positive("c_rho", *c_rho)
            }
            Self::Series(spec) => spec.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sign => "sign",
            Self::Linear { .. } => "linear",
            Self::Sigmoid { .. } => "sigmoid",
            Self::PolyProxy { .. } => "poly_proxy",
            Self::Series(_) => "series",
        }
    }

    /// The response law before clamping to a legal Bernoulli mean.
    pub fn response(&self, x: f64) -> f64 {
        let s = sign(x);
        let a = x.abs();
        match self {
            Self::Sign => s,
            Self::Linear { c_rho } => c_rho * x,
            Self::Sigmoid { omega } => {
                let e = (-omega * a).exp();
                s * (-(-omega * a).exp_m1()) / (1.0 + e)
            }
            Self::PolyProxy { p, c_rho } => s * c_rho * a.powi(*p as i32),
            Self::Series(spec) => s * spec.value(a),
        }
    }

    /// `ρ(x)`, always inside `[-1, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NonFinite("transfer input"));
        }
        Ok(self.response(x).clamp(-1.0, 1.0))
    }

    /// Proxy parameters implied by the transfer itself.
    ///
    /// Sigmoid uses the secant slope at `1/ω`, which lower-bounds `ρ` on
    /// `[0, 1/ω]` because the curve is concave on the positive half-line.
    pub fn natural_proxy(&self) -> Result<ProxyParams> {
        match self {
            Self::Sign => Ok(ProxyParams {
                p: 0,
                c_rho: 1.0,
                r: f64::INFINITY,
            }),
            Self::Linear { c_rho } => Ok(ProxyParams {
                p: 1,
                c_rho: *c_rho,
                r: 1.0 / c_rho,
            }),
            Self::Sigmoid { omega } => {
                let r = 1.0 / omega;
                Ok(ProxyParams {
                    p: 1,
                    c_rho: self.response(r) / r,
                    r,
                })
            }
            Self::PolyProxy { p, c_rho } => Ok(ProxyParams {
                p: *p,
                c_rho: *c_rho,
                r: c_rho.powf(-1.0 / *p as f64),
            }),
            Self::Series(spec) => {
                let adm = check_admissibility(spec)?;
                Ok(ProxyParams {
                    p: adm.p,
                    c_rho: adm.lower_const / adm.p as f64,
                    r: adm.valid_radius,
                })
            }
        }
    }
}

/// Derivative `c_ρ p x^{p-1}` of the proxy on the non-negative half-line.
pub fn proxy_derivative(pp: &ProxyParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("must be non-negative, got {x}")));
    }
    Ok(match pp.p {
        0 => 0.0,
        1 => pp.c_rho,
        p => pp.c_rho * p as f64 * x.powi(p as i32 - 1),
    })
}

/// Certifies a series-defined transfer: finds its minimal degree, the
/// derivative lower-bound constant and the radius on which the bound holds.
pub fn check_admissibility(spec: &SeriesSpec) -> Result<Admissibility> {
    spec.validate()?;
    let (&p, &a_p) = spec
        .coefficients
        .iter()
        .find(|(_, &a)| a != 0.0)
        .ok_or_else(|| Error::Inadmissible("all coefficients are zero".into()))?;
    if p == 0 {
        return Err(Error::Inadmissible("non-zero constant term, so ρ(0) ≠ 0".into()));
    }
    if a_p <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "leading coefficient a_{p} = {a_p} must be positive"
        )));
    }
    // Supplied higher-order coefficients must respect the tail bound; a finite
    // polynomial with no bound given takes M from its own coefficients.
    let tail = spec
        .coefficients
        .range(p + 1..)
        .map(|(&n, &a)| (n as f64 * a).abs())
        .fold(spec.tail_bound, f64::max);
    let slope = p as f64 * a_p;
    let valid_radius = if tail > 0.0 {
        spec.radius.min(slope / (4.0 * tail))
    } else {
        spec.radius
    };
    Ok(Admissibility {
        p,
        lower_const: 0.5 * slope,
        valid_radius,
    })
}

/// Numerically checks `ρ'(x) ≥ c_ρ p x^{p-1}` on a log-spaced grid in `(0, r)`.
///
/// Derivatives are central differences of the unclamped response law with
/// step `1e-6 r`.
pub fn verify_proxy_bound(tf: &TransferFunction, pp: &ProxyParams, grid_points: usize) -> Result<ProxyBoundReport> {
    if matches!(tf, TransferFunction::Sign) {
        return Err(Error::NotApplicable("the sign transfer is not differentiable"));
    }
    if grid_points == 0 {
        return Err(invalid("grid_points", "must be positive"));
    }
    require_positive("r", pp.r)?;
    let r = pp.r;
    let h = 1e-6 * r;
    let mut max_violation = 0.0_f64;
    let mut worst_x = 0.0;
    let mut holds = true;
    for i in 0..grid_points {
        // r·1e-6 up to r·10^{-6/n}: strictly inside (0, r)
        let exponent = -6.0 * (grid_points - i) as f64 / grid_points as f64;
        let x = r * 10f64.powf(exponent);
        let numeric = (tf.response(x + h) - tf.response(x - h)) / (2.0 * h);
        let required = proxy_derivative(pp, x)?;
        let violation = required - numeric;
        if violation > PROXY_BOUND_SLACK {
            holds = false;
        }
        if violation > max_violation {
            max_violation = violation;
            worst_x = x;
        }
    }
    Ok(ProxyBoundReport {
        holds,
        max_violation,
        worst_x,
        grid_points,
    })
}
