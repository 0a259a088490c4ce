//! The noisy comparison channel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::objectives::Objective;
use crate::transfer::TransferFunction;

/// A signed Bernoulli draw: `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn as_f64(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }
}

const MEAN_CLAMP_TOL: f64 = 1e-12;

/// Draws `+1` with probability `(μ + 1)/2` and `-1` otherwise, so the mean is `μ`.
pub fn signed_bernoulli<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<Outcome> {
    if mu.is_nan() || mu.abs() > 1.0 + MEAN_CLAMP_TOL {
        return Err(Error::InvalidMean(mu));
    }
    let p_plus = (mu.clamp(-1.0, 1.0) + 1.0) / 2.0;
    let draw: f64 = rng.random();
    Ok(if draw < p_plus { Outcome::Plus } else { Outcome::Minus })
}

/// Binds an objective and a transfer function to a seeded random source and
/// answers duels `(x, y)` with `o ~ Ber±(ρ(f(x) - f(y)))`.
///
/// The objective is evaluated on all of ℝ^d; queried points need not be feasible.
pub struct ComparisonOracle<'a, O: Objective + ?Sized, R: Rng> {
    objective: &'a O,
    transfer: &'a TransferFunction,
    rng: R,
    queries: u64,
}

impl<'a, O: Objective + ?Sized, R: Rng> ComparisonOracle<'a, O, R> {
    pub fn new(objective: &'a O, transfer: &'a TransferFunction, rng: R) -> Self {
        Self {
            objective,
            transfer,
            rng,
            queries: 0,
        }
    }

    pub fn objective(&self) -> &'a O {
        self.objective
    }

    pub fn transfer(&self) -> &'a TransferFunction {
        self.transfer
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    /// Mean of the outcome of a duel, `ρ(f(x) - f(y))`. Does not consume a query.
    pub fn mean(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let dim = self.objective.dim();
        x.check_dim(dim)?;
        y.check_dim(dim)?;
        let diff = self.objective.value(x) - self.objective.value(y);
        self.transfer.eval(diff)
    }

    pub fn duel(&mut self, x: &Vector, y: &Vector) -> Result<Outcome> {
        let mu = self.mean(x, y)?;
        self.queries = self.queries.checked_add(1).ok_or(Error::CounterOverflow)?;
        signed_bernoulli(mu, &mut self.rng)
    }
}
