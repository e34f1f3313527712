//! Orthogonal families materialized from Cholesky data: polynomial
//! extraction, evaluation stacks, shift matrices and Jacobi matrices.
//!
//! The family is `P = Sχ`, monic by blocks because the diagonal blocks of `S`
//! are identities. Shift matrices `Λ_a` realize multiplication by `x_a` on the
//! monomial vector (`Λ_a χ = x_a χ`); their conjugates `J_a = S Λ_a S⁻¹` do
//! the same on the family and are block tridiagonal. Polynomials of the shift
//! act by rows: row `α` of `Q(Λ)` holds the coefficients of `x^α · Q`, which
//! is both the cheapest construction and the bridge to the truncated ideal
//! used by the poisedness theory.

use std::sync::Arc;

use crate::block_linalg::{block_cholesky, build_moment_matrix, BlockMatrix, CholeskyResult, Mat};
use crate::error::{Error, Result};
use crate::graded_basis::GradedBasis;
use crate::measures::MomentFunctional;
use crate::poly::MPoly;
use crate::scalar::Scalar;

/// A monic MVOPR family: basis layout, Cholesky data, and the measure it
/// came from. Immutable after construction.
pub struct MVOPRFamily<S: Scalar> {
    basis: Arc<GradedBasis>,
    chol: CholeskyResult<S>,
    measure: Arc<dyn MomentFunctional<S>>,
}

impl<S: Scalar> MVOPRFamily<S> {
    /// Builds the truncated moment matrix and factors it.
    pub fn compute(
        measure: Arc<dyn MomentFunctional<S>>,
        max_degree: usize,
        tol: f64,
    ) -> Result<Self> {
        let basis = Arc::new(GradedBasis::new(measure.dimension(), max_degree)?);
        let g = build_moment_matrix(measure.as_ref(), &basis);
        let chol = block_cholesky(&g, tol)?;
        Ok(MVOPRFamily {
            basis,
            chol,
            measure,
        })
    }

    pub fn from_parts(
        basis: Arc<GradedBasis>,
        chol: CholeskyResult<S>,
        measure: Arc<dyn MomentFunctional<S>>,
    ) -> Self {
        MVOPRFamily {
            basis,
            chol,
            measure,
        }
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn chol(&self) -> &CholeskyResult<S> {
        &self.chol
    }

    pub fn measure(&self) -> &Arc<dyn MomentFunctional<S>> {
        &self.measure
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn max_degree(&self) -> usize {
        self.basis.max_degree()
    }

    /// The `|[k]|` monic polynomials of `P_[k]`, coefficient rows of `S`.
    pub fn polynomial_block(&self, k: usize) -> Vec<MPoly<S>> {
        let s = self.chol.s().mat();
        let range = self.basis.block_range(k);
        range
            .map(|row| {
                let mut p = MPoly::zero(self.basis.dimension());
                for col in 0..self.basis.block_offset(k + 1) {
                    let c = s.at(row, col).clone();
                    p.add_term(self.basis.multiindex_at(col).clone(), c);
                }
                p
            })
            .collect()
    }

    /// Concatenated values `P_[k_lo](x), …, P_[k_hi](x)`.
    pub fn eval_stack(&self, x: &[S], k_lo: usize, k_hi: usize) -> Vec<S> {
        let mut out = Vec::new();
        for k in k_lo..=k_hi {
            for p in self.polynomial_block(k) {
                out.push(p.eval(x));
            }
        }
        out
    }
}

/// The shift matrices `Λ_1, …, Λ_D`: single superdiagonal band of 0/1 blocks,
/// `(Λ_a)_{α,β} = δ_{α+e_a, β}`.
pub fn build_shift<S: Scalar>(basis: &Arc<GradedBasis>) -> Vec<BlockMatrix<S>> {
    (0..basis.dimension())
        .map(|axis| apply_poly_to_shift(&MPoly::variable(basis.dimension(), axis), basis))
        .collect()
}

/// `Q(Λ) = Σ_γ c_γ Λ_1^{γ_1} ⋯ Λ_D^{γ_D}`, assembled row-wise: row `α` holds
/// the coefficients of `x^α Q(x)`. Valid on block rows `k ≤ L − deg Q`.
pub fn apply_poly_to_shift<S: Scalar>(q: &MPoly<S>, basis: &Arc<GradedBasis>) -> BlockMatrix<S> {
    debug_assert_eq!(q.dimension(), basis.dimension());
    let n = basis.len();
    let top = basis.max_degree();
    let m = q.degree().unwrap_or(0);
    let mut mat = Mat::zeros(n, n);
    for row in 0..n {
        let alpha = basis.multiindex_at(row).clone();
        for (gamma, c) in q.terms() {
            let beta = alpha.plus(gamma);
            if beta.degree() > top {
                continue;
            }
            let col = basis.index_of(&beta).expect("within truncation");
            *mat.at_mut(row, col) = c.clone();
        }
    }
    let valid = (top + 1).saturating_sub(m);
    let lo = q.terms().map(|(g, _)| g.degree()).min().unwrap_or(0) as i64;
    BlockMatrix::from_mat(basis.clone(), mat, valid, lo, m as i64)
}

/// Jacobi matrices `J_a = S Λ_a S⁻¹`, block tridiagonal on their valid range
/// (rows `k ≤ L − 1`), satisfying `J_a H = H J_aᵀ`.
pub fn build_jacobi<S: Scalar>(fam: &MVOPRFamily<S>) -> Vec<BlockMatrix<S>> {
    build_shift(fam.basis())
        .into_iter()
        .map(|lambda| fam.chol.s().mul(&lambda).mul(fam.chol.s_inv()))
        .collect()
}

/// `Q(J) = Σ_γ c_γ J_1^{γ_1} ⋯ J_D^{γ_D}` by honest matrix products (the
/// `J_a` commute on the valid range; the fixed axis order is immaterial).
pub fn apply_poly_to_jacobi<S: Scalar>(q: &MPoly<S>, jacobi: &[BlockMatrix<S>]) -> BlockMatrix<S> {
    let basis = jacobi
        .first()
        .expect("at least one Jacobi matrix")
        .basis()
        .clone();
    let mut acc = BlockMatrix::zero(basis.clone());
    for (gamma, c) in q.terms() {
        let mut term = BlockMatrix::identity(basis.clone());
        for (axis, &e) in gamma.0.iter().enumerate() {
            for _ in 0..e {
                term = term.mul(&jacobi[axis]);
            }
        }
        acc = acc.add(&term.scale(c));
    }
    acc
}

/// Degree range (`k + deg Q ≤ L`) a transform of degree `k` requires; callers
/// get the needed truncation named instead of silent garbage.
pub fn require_degree(basis: &GradedBasis, k: usize, m: usize) -> Result<()> {
    if k + m > basis.max_degree() {
        return Err(Error::DegreeOverflow {
            needed: k + m,
            have: basis.max_degree(),
        });
    }
    Ok(())
}
