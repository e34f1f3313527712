//! Moment functionals: everything the moment matrix needs is the map
//! `α ↦ ∫ x^α dμ`. The built-in functionals have closed-form moments so the
//! exact pipeline never sees quadrature error.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graded_basis::MultiIndex;
use crate::poly::MPoly;
use crate::scalar::Scalar;

/// A measure, reduced to its moments. Implementations must be deterministic;
/// moments are pure and reentrant.
pub trait MomentFunctional<S: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;

    /// `∫ x^α dμ`.
    fn moment(&self, alpha: &MultiIndex) -> S;
}

/// Product box `[a_1,b_1] × … × [a_D,b_D]` with a polynomial weight.
///
/// `∫ x^α w dx = Σ_β c_β ∏_i (b_i^{α_i+β_i+1} − a_i^{α_i+β_i+1})/(α_i+β_i+1)`,
/// exact over rationals with rational bounds.
pub struct BoxMeasure<S: Scalar> {
    bounds: Vec<(S, S)>,
    weight: MPoly<S>,
}

impl<S: Scalar> BoxMeasure<S> {
    pub fn new(bounds: Vec<(S, S)>, weight: MPoly<S>) -> Result<Self> {
        if weight.dimension() != bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: weight.dimension(),
            });
        }
        Ok(BoxMeasure { bounds, weight })
    }

    /// Unit weight on the given box.
    pub fn uniform(bounds: Vec<(S, S)>) -> Self {
        let weight = MPoly::one(bounds.len());
        BoxMeasure { bounds, weight }
    }
}

fn power<S: Scalar>(base: &S, exp: usize) -> S {
    let mut acc = S::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

impl<S: Scalar> MomentFunctional<S> for BoxMeasure<S> {
    fn dimension(&self) -> usize {
        self.bounds.len()
    }

    fn moment(&self, alpha: &MultiIndex) -> S {
        let mut total = S::zero();
        for (beta, c) in self.weight.terms() {
            let mut term = c.clone();
            for (axis, (a, b)) in self.bounds.iter().enumerate() {
                let e = alpha.0[axis] as usize + beta.0[axis] as usize;
                let hi = power(b, e + 1);
                let lo = power(a, e + 1);
                term = term * (hi - lo) / S::from_int((e + 1) as i64);
            }
            total = total + term;
        }
        total
    }
}

/// Finitely supported measure `Σ_s w_s δ_{x_s}`.
pub struct DiscreteMeasure<S: Scalar> {
    points: Vec<Vec<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn new(points: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid(
                "discrete measure needs support points".into(),
            ));
        }
        if points.len() != weights.len() {
            return Err(Error::SizeMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Invalid("support points of mixed dimension".into()));
        }
        Ok(DiscreteMeasure { points, weights })
    }
}

impl<S: Scalar> MomentFunctional<S> for DiscreteMeasure<S> {
    fn dimension(&self) -> usize {
        self.points[0].len()
    }

    fn moment(&self, alpha: &MultiIndex) -> S {
        let mut total = S::zero();
        for (p, w) in self.points.iter().zip(&self.weights) {
            let mut term = w.clone();
            for (axis, &e) in alpha.0.iter().enumerate() {
                term = term * power(&p[axis], e as usize);
            }
            total = total + term;
        }
        total
    }
}

/// The Darboux-transformed measure `T dμ = Q dμ`, realized on moments:
/// `(T μ)(α) = Σ_β c_β μ(α + β)` over the terms of the expanded `Q`.
pub struct PerturbedMeasure<S: Scalar> {
    base: Arc<dyn MomentFunctional<S>>,
    perturbation: MPoly<S>,
}

impl<S: Scalar> PerturbedMeasure<S> {
    pub fn new(base: Arc<dyn MomentFunctional<S>>, perturbation: MPoly<S>) -> Result<Self> {
        if perturbation.dimension() != base.dimension() {
            return Err(Error::DimensionMismatch {
                expected: base.dimension(),
                got: perturbation.dimension(),
            });
        }
        Ok(PerturbedMeasure { base, perturbation })
    }
}

/// Convenience constructor mirroring `T dμ := Q dμ`.
pub fn perturb<S: Scalar>(
    base: Arc<dyn MomentFunctional<S>>,
    q: MPoly<S>,
) -> Result<PerturbedMeasure<S>> {
    PerturbedMeasure::new(base, q)
}

impl<S: Scalar> MomentFunctional<S> for PerturbedMeasure<S> {
    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn moment(&self, alpha: &MultiIndex) -> S {
        let mut total = S::zero();
        for (beta, c) in self.perturbation.terms() {
            total = total + c.clone() * self.base.moment(&alpha.plus(beta));
        }
        total
    }
}
