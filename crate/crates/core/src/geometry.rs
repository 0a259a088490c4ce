//! Vectors, uniform directions on the unit sphere and Euclidean projection.

use std::ops::{Add, Index, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};

/// A point or direction in ℝ^d with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector coordinates"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The `index`-th standard basis vector.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + scale * b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            })
        }
    }

    /// Reorders coordinates so that `out[i] = self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Vector {
        Vector(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;

    fn add(self, rhs: &Vector) -> Vector {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Vector {
    type Output = Vector;

    fn sub(self, rhs: &Vector) -> Vector {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;

    fn mul(self, rhs: f64) -> Vector {
        self.scale(rhs)
    }
}

impl Neg for &Vector {
    type Output = Vector;

    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

const DEGENERATE_NORM: f64 = 1e-300;

/// Draws a direction uniformly from the unit sphere in ℝ^d by normalizing a
/// standard Gaussian vector.
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vector> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut coords = vec![0.0; dim];
    loop {
        for c in coords.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm >= DEGENERATE_NORM {
            coords.iter_mut().for_each(|c| *c /= norm);
            return Ok(Vector(coords));
        }
    }
}

/// A closed convex feasible set supporting Euclidean projection.
pub trait ConvexDomain {
    fn dim(&self) -> usize;

    /// Euclidean diameter of the set.
    fn diameter(&self) -> f64;

    fn contains(&self, point: &Vector) -> bool;

    /// The closest point of the set to `point`.
    fn project(&self, point: &Vector) -> Result<Vector>;
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    center: Vector,
    radius: f64,
}

impl BallDomain {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        require_positive("radius", radius)?;
        Ok(Self { center, radius })
    }

    /// Ball of the given radius centred at the origin.
    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Self::new(Vector::zeros(dim), radius)
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ConvexDomain for BallDomain {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn contains(&self, point: &Vector) -> bool {
        point.dim() == self.dim() && point.dist(&self.center) <= self.radius
    }

    fn project(&self, point: &Vector) -> Result<Vector> {
        point.check_dim(self.dim())?;
        let offset = point - &self.center;
        let dist = offset.norm();
        if dist <= self.radius {
            return Ok(point.clone());
        }
        // Shrink until the rounded result is inside, so projecting again is a no-op.
        let mut scale = self.radius / dist;
        loop {
            let candidate = self.center.add_scaled(scale, &offset);
            if candidate.dist(&self.center) <= self.radius {
                return Ok(candidate);
            }
            scale *= 1.0 - f64::EPSILON;
        }
    }
}

/// Lower bound `gap / dist` on the gradient norm at a point whose suboptimality
/// gap is `gap` and whose distance to the minimizer is `dist`.
pub fn gradient_norm_lower_bound(gap: f64, dist: f64) -> Result<f64> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(invalid("gap", format!("must be positive, got {gap}")));
    }
    if !(dist > 0.0 && dist.is_finite()) {
        return Err(invalid("dist", format!("must be positive, got {dist}")));
    }
    Ok(gap / dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derived_rng;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn vector_rejects_empty_and_nan() {
        assert_eq!(Vector::new(vec![]), Err(Error::InvalidDimension(0)));
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn sphere_rejects_zero_dimension() {
        let mut rng = derived_rng(1, 0);
        assert_eq!(sample_unit_sphere(0, &mut rng), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn sphere_in_one_dimension_is_a_fair_sign() {
        let mut rng = derived_rng(7, 0);
        let n = 20_000;
        let mut plus = 0;
        for _ in 0..n {
            let u = sample_unit_sphere(1, &mut rng).unwrap();
            assert!(u[0] == 1.0 || u[0] == -1.0);
            if u[0] > 0.0 {
                plus += 1;
            }
        }
        let frac = plus as f64 / n as f64;
        // 4 sigma for a fair coin at n = 2e4
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let mut rng = derived_rng(3, 0);
        for d in [1, 2, 3, 17, 200] {
            for _ in 0..200 {
                let u = sample_unit_sphere(d, &mut rng).unwrap();
                assert!((u.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let unit = BallDomain::centered(2, 1.0).unwrap();
        let p = unit.project(&v(&[3.0, 4.0])).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);

        let inside = v(&[0.2, -0.1]);
        assert_eq!(unit.project(&inside).unwrap(), inside);

        let shifted = BallDomain::new(v(&[1.0, 1.0]), 2.0).unwrap();
        let p = shifted.project(&v(&[1.0, 5.0])).unwrap();
        assert_eq!(p, v(&[1.0, 3.0]));
    }

    #[test]
    fn projection_dimension_mismatch() {
        let unit = BallDomain::centered(2, 1.0).unwrap();
        assert_eq!(
            unit.project(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn ball_rejects_bad_radius() {
        assert!(BallDomain::centered(2, 0.0).is_err());
        assert!(BallDomain::centered(2, -1.0).is_err());
        assert!(BallDomain::centered(0, 1.0).is_err());
        assert_eq!(BallDomain::centered(3, 1.5).unwrap().diameter(), 3.0);
    }

    #[test]
    fn gradient_lower_bound() {
        assert_eq!(gradient_norm_lower_bound(0.1, 2.0).unwrap(), 0.05);
        assert_eq!(gradient_norm_lower_bound(1.0, 1.0).unwrap(), 1.0);
        let (eps, diam) = (0.01, 4.0);
        assert_eq!(gradient_norm_lower_bound(eps, diam).unwrap(), eps / diam);
        assert!(gradient_norm_lower_bound(0.0, 1.0).is_err());
        assert!(gradient_norm_lower_bound(1.0, -1.0).is_err());
    }
}
