//! Multivariate orthogonal polynomials (MVOPR) from moment data, and their
//! Darboux transformations under polynomial perturbations of the measure.
//!
//! The pipeline: a moment functional `α ↦ ∫ x^α dμ` yields a degree-blocked
//! moment matrix `G`; its block Cholesky factorization `G = S⁻¹ H S⁻ᵀ`
//! materializes the monic orthogonal family `P = Sχ`. Multiplying the measure
//! by a polynomial `Q` transforms the family; the transformed polynomials are
//! recovered two independent ways:
//!
//! * the quasi-determinant sample-matrix formula, built from values (and
//!   directional derivatives, for repeated factors) of the original family at
//!   a poised set of nodes on the hypersurface `Q = 0`, and
//! * the oracle route: a second Cholesky of the perturbed moment matrix.
//!
//! Agreement of the two routes is the library's central verification, exact
//! over rational scalars.
//!
//! Modules follow the pipeline: [`graded_basis`] (multi-index bookkeeping),
//! [`poly`] (sparse polynomial arithmetic and directional derivatives),
//! [`measures`] (moment functionals), [`block_linalg`] (blocked matrices and
//! Cholesky), [`mvopr`] (families, shift and Jacobi matrices), [`darboux`]
//! (resolvent, sample matrices, poisedness, the transform itself), [`nodes`]
//! (node sampling and poised-set search), [`io`] (file formats).

pub mod block_linalg;
pub mod darboux;
pub mod error;
pub mod graded_basis;
pub mod io;
pub mod measures;
pub mod mvopr;
pub mod nodes;
pub mod poly;
pub mod scalar;

pub use block_linalg::{BlockMatrix, CholeskyResult, Mat};
pub use darboux::{DarbouxSpec, NodeEntry, NodeSet, Resolvent, SampleMatrices};
pub use error::{Error, Result};
pub use graded_basis::{GradedBasis, MultiIndex};
pub use measures::{BoxMeasure, DiscreteMeasure, MomentFunctional, PerturbedMeasure};
pub use mvopr::MVOPRFamily;
pub use poly::{Direction, MPoly};
pub use scalar::{ComplexParts, FromReal, Rat, Scalar};

/// Numerical thresholds for the float scalar path. Exact scalars ignore them.
///
/// All thresholds are relative: an entry is "zero" when its magnitude is below
/// `tol × scale` for the natural scale of the matrix or polynomial at hand.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Block-singularity threshold for the Cholesky recursion.
    pub singular: f64,
    /// Poisedness threshold on the smallest singular value of a sample matrix.
    pub poised: f64,
    /// Acceptance threshold for residuals of identity checks and oracle comparisons.
    pub residual: f64,
    /// How far off its hypersurface a node may sit (relative to the factor's
    /// coefficient scale); float root finding guarantees 1e-12.
    pub on_variety: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            singular: 1e-10,
            poised: 1e-8,
            residual: 1e-9,
            on_variety: 1e-12,
        }
    }
}
