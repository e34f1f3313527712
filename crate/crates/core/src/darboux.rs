//! Darboux (Christoffel) transformations of an orthogonal family under a
//! polynomial perturbation `T dμ = Q dμ`.
//!
//! Two independent routes to the transformed family coexist here:
//!
//! * **Oracle**: factor the perturbed moment matrix directly
//!   ([`resolvent_via_two_choleskys`]); the transformed `S` rows are ground
//!   truth, and the resolvent `ω = (TS) Q(Λ) S⁻¹` falls out along the way.
//! * **Sample-matrix formula** ([`christoffel_transform`]): evaluate the
//!   original family (and, for repeated prime factors, its directional
//!   derivatives) at a poised node set on `Z(Q)`, form the sample matrices,
//!   and read the transform off the last quasi-determinant:
//!
//!   `Q(x)·TP_[k](x) = (Q(Λ))_{[k],[k+m]} · (P_[k+m](x) − Σ_{[k,m]} (Σ_k^m)⁻¹ P_stack(x))`.
//!
//!   The division by `Q` is carried out exactly on coefficients; any failure
//!   surfaces as `InexactDivision` instead of being patched numerically.
//!
//! Nodes may be complex while the family stays real; everything here is
//! generic over a node scalar `F` embedding the family scalar `S`.

use std::sync::Arc;

use crate::block_linalg::{
    block_cholesky, build_moment_matrix, min_singular_value, slice_s, BlockMatrix, Mat,
};
use crate::error::{Error, Result};
use crate::graded_basis::{cumulative_dim, window_size, GradedBasis};
use crate::measures::PerturbedMeasure;
use crate::mvopr::{
    apply_poly_to_jacobi, apply_poly_to_shift, build_jacobi, require_degree, MVOPRFamily,
};
use crate::poly::{Direction, MPoly};
use crate::scalar::{ComplexParts, FromReal, Scalar};
use crate::Tolerances;

/// The generating polynomial in factored form, `Q = ∏ R_a^{d_a}`. The library
/// never factors polynomials itself; the factorization is the caller's claim,
/// and the poisedness diagnostics surface its violation empirically.
#[derive(Clone, Debug)]
pub struct DarbouxSpec<S: Scalar> {
    factors: Vec<(MPoly<S>, u32)>,
    q: MPoly<S>,
    m: usize,
}

impl<S: Scalar> DarbouxSpec<S> {
    pub fn new(factors: Vec<(MPoly<S>, u32)>) -> Result<Self> {
        let q = MPoly::expand_factored(&factors)?;
        let m = q
            .degree()
            .ok_or_else(|| Error::Invalid("generating polynomial is zero".into()))?;
        let expected: usize = factors
            .iter()
            .map(|(r, d)| r.degree().unwrap_or(0) * *d as usize)
            .sum();
        if m != expected {
            return Err(Error::Invalid(format!(
                "degree bookkeeping failed: deg Q = {m}, Σ n_a·d_a = {expected}"
            )));
        }
        Ok(DarbouxSpec { factors, q, m })
    }

    pub fn factors(&self) -> &[(MPoly<S>, u32)] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, a: usize) -> &MPoly<S> {
        &self.factors[a].0
    }

    pub fn multiplicity(&self, a: usize) -> u32 {
        self.factors[a].1
    }

    /// `n_a = deg R_a`.
    pub fn factor_degree(&self, a: usize) -> usize {
        self.factors[a].0.degree().unwrap_or(0)
    }

    /// The expanded generating polynomial.
    pub fn q(&self) -> &MPoly<S> {
        &self.q
    }

    /// `m = deg Q = Σ n_a d_a`.
    pub fn total_degree(&self) -> usize {
        self.m
    }

    pub fn dimension(&self) -> usize {
        self.q.dimension()
    }

    /// True when every prime factor is simple (`d_a = 1`).
    pub fn is_simple(&self) -> bool {
        self.factors.iter().all(|(_, d)| *d == 1)
    }

    pub fn embed<F: FromReal<S>>(&self) -> DarbouxSpec<F> {
        DarbouxSpec {
            factors: self.factors.iter().map(|(r, d)| (r.embed(), *d)).collect(),
            q: self.q.embed(),
            m: self.m,
        }
    }
}

/// One interpolation datum: a point on `Z(R_a)`, its derivative order `j`
/// (`0` = plain evaluation) and the direction of the order-`j` operator.
#[derive(Clone, Debug)]
pub struct NodeEntry<F: Scalar> {
    pub point: Vec<F>,
    pub factor: usize,
    pub order: usize,
    pub direction: Direction<F>,
}

impl<F: Scalar> NodeEntry<F> {
    /// A plain evaluation node.
    pub fn plain(point: Vec<F>, factor: usize) -> Self {
        let dimension = point.len();
        NodeEntry {
            point,
            factor,
            order: 0,
            direction: Direction::evaluation(dimension),
        }
    }
}

/// Ordered node collection; sample-matrix columns follow entry order.
#[derive(Clone, Debug)]
pub struct NodeSet<F: Scalar> {
    entries: Vec<NodeEntry<F>>,
}

/// A `(factor, order, direction)` class together with its node count
/// `ν_i^{(a,j)}`.
#[derive(Clone, Debug)]
pub struct NodeClass<F: Scalar> {
    pub factor: usize,
    pub order: usize,
    pub direction: Direction<F>,
    pub count: usize,
}

impl<F: Scalar> NodeSet<F> {
    pub fn new(entries: Vec<NodeEntry<F>>) -> Self {
        NodeSet { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[NodeEntry<F>] {
        &self.entries
    }

    pub fn push(&mut self, entry: NodeEntry<F>) {
        self.entries.push(entry);
    }

    /// Node count per factor, `n_a` in the node-distribution bounds.
    pub fn counts_by_factor(&self, num_factors: usize) -> Vec<usize> {
        let mut counts = vec![0; num_factors];
        for e in &self.entries {
            counts[e.factor] += 1;
        }
        counts
    }

    /// Counts grouped by factor, order, and distinct direction.
    pub fn class_counts(&self) -> Vec<NodeClass<F>> {
        let mut classes: Vec<NodeClass<F>> = Vec::new();
        for e in &self.entries {
            match classes
                .iter_mut()
                .find(|c| c.factor == e.factor && c.order == e.order && c.direction == e.direction)
            {
                Some(c) => c.count += 1,
                None => classes.push(NodeClass {
                    factor: e.factor,
                    order: e.order,
                    direction: e.direction.clone(),
                    count: 1,
                }),
            }
        }
        classes
    }

    /// Checks the structural invariants against a factored `Q`: indices in
    /// range, orders below the multiplicities, every point on its tagged
    /// factor's hypersurface, and linearly independent directions within
    /// each `(factor, order)` group.
    pub fn validate<S: Scalar>(&self, spec: &DarbouxSpec<S>, tol: f64) -> Result<()>
    where
        F: FromReal<S>,
    {
        let dimension = spec.dimension();
        let embedded: Vec<MPoly<F>> = spec.factors().iter().map(|(r, _)| r.embed()).collect();
        for (idx, e) in self.entries.iter().enumerate() {
            if e.factor >= spec.num_factors() {
                return Err(Error::Invalid(format!(
                    "node {idx} references factor {} of {}",
                    e.factor,
                    spec.num_factors()
                )));
            }
            if e.point.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: e.point.len(),
                });
            }
            let d_a = spec.multiplicity(e.factor) as usize;
            if e.order >= d_a {
                return Err(Error::Invalid(format!(
                    "node {idx}: derivative order {} exceeds multiplicity {} - 1 on factor {}",
                    e.order, d_a, e.factor
                )));
            }
            if e.direction.order() != e.order {
                return Err(Error::Invalid(format!(
                    "node {idx}: direction order {} != node order {}",
                    e.direction.order(),
                    e.order
                )));
            }
            let scale = 1.0 + embedded[e.factor].max_abs_coeff();
            let value = embedded[e.factor].eval(&e.point);
            if !value.is_zero_with(tol * scale) {
                return Err(Error::NodeOffVariety {
                    index: idx,
                    factor: e.factor,
                    magnitude: value.abs_f64(),
                });
            }
        }
        let classes = self.class_counts();
        for a in 0..spec.num_factors() {
            for j in 1..spec.multiplicity(a) as usize {
                let dirs: Vec<&Direction<F>> = classes
                    .iter()
                    .filter(|c| c.factor == a && c.order == j)
                    .map(|c| &c.direction)
                    .collect();
                if dirs.len() < 2 {
                    continue;
                }
                let mat = Mat::from_rows(dirs.iter().map(|d| d.coeffs().to_vec()).collect());
                if mat.rank(tol) < dirs.len() {
                    return Err(Error::Invalid(format!(
                        "directions for factor {a}, order {j} are linearly dependent"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&F) -> T + Copy) -> NodeSet<T> {
        NodeSet {
            entries: self
                .entries
                .iter()
                .map(|e| NodeEntry {
                    point: e.point.iter().map(f).collect(),
                    factor: e.factor,
                    order: e.order,
                    direction: e.direction.map_scalar(f),
                })
                .collect(),
        }
    }
}

/// Resolvent pair: `ω = (TS) Q(Λ) S⁻¹` (banded, diagonals `0..m`) and the
/// adjoint `M = S (TS)⁻¹` (lower unitriangular).
pub struct Resolvent<S: Scalar> {
    pub omega: BlockMatrix<S>,
    pub adjoint: BlockMatrix<S>,
}

/// Ground-truth route: Cholesky of the perturbed moment matrix. Returns the
/// resolvent pair and the transformed family.
pub fn resolvent_via_two_choleskys<S: Scalar>(
    fam: &MVOPRFamily<S>,
    q: &MPoly<S>,
    tol: f64,
) -> Result<(Resolvent<S>, MVOPRFamily<S>)> {
    let basis = fam.basis().clone();
    let tmeasure = Arc::new(PerturbedMeasure::new(fam.measure().clone(), q.clone())?);
    let tg = build_moment_matrix(tmeasure.as_ref(), &basis);
    let tchol = block_cholesky(&tg, tol)?;
    let ql = apply_poly_to_shift(q, &basis);
    let omega = tchol.s().mul(&ql).mul(fam.chol().s_inv());
    let adjoint = fam.chol().s().mul(tchol.s_inv());
    let tfam = MVOPRFamily::from_parts(basis, tchol, tmeasure);
    Ok((Resolvent { omega, adjoint }, tfam))
}

/// Residuals of the structural resolvent identities; every field is an exact
/// zero on the rational path.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BandReport {
    /// `ω` blocks outside diagonals `[0, m]`.
    pub outside_band: f64,
    /// `ω_{[k],[k+m]} − (Q(Λ))_{[k],[k+m]}`.
    pub top_band: f64,
    /// `ω_{[k],[k]} − (TH)_[k] H_[k]⁻¹`.
    pub diagonal: f64,
    /// `Q(J) − Mω` (LU route; `Q(J)` by honest Jacobi products).
    pub lu: f64,
    /// `Q(TJ) − ωM` (UL route).
    pub ul: f64,
    /// `det (Q(J))^{[k]} − ∏_{l<k} det TH_[l] / det H_[l]`.
    pub determinant: f64,
    /// Block rows the checks covered.
    pub checked_blocks: usize,
}

impl BandReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.outside_band,
            self.top_band,
            self.diagonal,
            self.lu,
            self.ul,
            self.determinant,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_abs_diff<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> f64 {
    a.sub(b).max_abs()
}

/// Verifies the banded structure of `ω`, its top band and diagonal, the
/// LU/UL factorizations of `Q(J)` and `Q(TJ)`, and the determinant identity.
/// Report-only: returns residuals rather than failing.
pub fn resolvent_band_identities<S: Scalar>(
    res: &Resolvent<S>,
    fam: &MVOPRFamily<S>,
    tfam: &MVOPRFamily<S>,
    q: &MPoly<S>,
) -> BandReport {
    let basis = fam.basis();
    let top = basis.max_degree();
    let m = q.degree().unwrap_or(0);
    let ql = apply_poly_to_shift(q, basis);
    let omega = &res.omega;
    let valid_w = omega.valid_blocks();

    let mut outside_band = 0.0f64;
    let mut top_band = 0.0f64;
    let mut diagonal = 0.0f64;
    for k in 0..valid_w {
        for l in 0..=top {
            if l < k || l > k + m {
                outside_band = outside_band.max(omega.block(k, l).max_abs());
            }
        }
        if k + m <= top {
            top_band = top_band.max(max_abs_diff(&omega.block(k, k + m), &ql.block(k, k + m)));
        }
        let th_h_inv = tfam.chol().h_block(k).mul(fam.chol().h_inv_block(k));
        diagonal = diagonal.max(max_abs_diff(&omega.block(k, k), &th_h_inv));
    }

    let qj = apply_poly_to_jacobi(q, &build_jacobi(fam));
    let m_omega = res.adjoint.mul(omega);
    let rows_lu = qj.valid_blocks().min(m_omega.valid_blocks());
    let n_lu = basis.block_offset(rows_lu);
    let lu = max_abs_diff(
        &qj.mat().submatrix(0..n_lu, 0..basis.len()),
        &m_omega.mat().submatrix(0..n_lu, 0..basis.len()),
    );

    let qtj = apply_poly_to_jacobi(q, &build_jacobi(tfam));
    let omega_m = omega.mul(&res.adjoint);
    let rows_ul = qtj.valid_blocks().min(omega_m.valid_blocks());
    let n_ul = basis.block_offset(rows_ul);
    let ul = max_abs_diff(
        &qtj.mat().submatrix(0..n_ul, 0..basis.len()),
        &omega_m.mat().submatrix(0..n_ul, 0..basis.len()),
    );

    let mut determinant = 0.0f64;
    let mut ratio = S::one();
    for k in 1..=qj.valid_blocks() {
        let h = fam.chol().h_block(k - 1).det();
        let th = tfam.chol().h_block(k - 1).det();
        ratio = ratio * (th / h);
        let lhs = qj.leading_truncation(k).det();
        determinant = determinant.max((lhs - ratio.clone()).abs_f64());
    }

    BandReport {
        outside_band,
        top_band,
        diagonal,
        lu,
        ul,
        determinant,
        checked_blocks: valid_w,
    }
}

fn embedded_block<S: Scalar, F: FromReal<S>>(fam: &MVOPRFamily<S>, k: usize) -> Vec<MPoly<F>> {
    fam.polynomial_block(k).iter().map(MPoly::embed).collect()
}

/// Value of `∂^j p/∂n` at the entry's point, for each polynomial in `polys`.
fn node_column<F: Scalar>(polys: &[MPoly<F>], entry: &NodeEntry<F>) -> Vec<F> {
    polys
        .iter()
        .map(|p| {
            p.directional_derivative(&entry.direction)
                .eval(&entry.point)
        })
        .collect()
}

/// Evaluates the banded kernel relation at every tagged node:
/// `Σ_{l=0}^m ω_{[k],[k+l]} (∂^j P_{[k+l]}/∂n)(p) = 0` over all valid `k`,
/// exact on the rational path. Returns the maximum absolute residual.
pub fn kernel_check<S, F>(
    res: &Resolvent<S>,
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    nodes: &NodeSet<F>,
    tols: &Tolerances,
) -> Result<f64>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    nodes.validate(spec, tols.on_variety)?;
    let basis = fam.basis();
    let top = basis.max_degree();
    let m = spec.total_degree();
    if m > top {
        return Err(Error::DegreeOverflow {
            needed: m,
            have: top,
        });
    }
    let blocks: Vec<Vec<MPoly<F>>> = (0..=top).map(|d| embedded_block(fam, d)).collect();
    let omega = res.omega.map_scalar(F::from_real);
    let mut worst = 0.0f64;
    for k in 0..res.omega.valid_blocks().min(top + 1 - m) {
        for entry in nodes.entries() {
            let mut acc = vec![F::zero(); basis.block_len(k)];
            for l in 0..=m {
                let w = omega.block(k, k + l);
                let contrib = w.mul_vec(&node_column(&blocks[k + l], entry));
                for (a, c) in acc.iter_mut().zip(contrib) {
                    *a = a.clone() + c;
                }
            }
            for v in &acc {
                worst = worst.max(v.abs_f64());
            }
        }
    }
    Ok(worst)
}

/// The square sample matrix `Σ_k^m` (stacked degrees `k..k+m-1` at the nodes)
/// and the bordering block `Σ_{[k,m]}` (degree `k+m`). Columns follow node
/// entry order; Wroński-type columns appear wherever an entry carries a
/// derivative tag.
pub struct SampleMatrices<F: Scalar> {
    pub sigma: Mat<F>,
    pub sigma_top: Mat<F>,
}

pub fn build_sample_matrices<S, F>(
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    nodes: &NodeSet<F>,
    k: usize,
    tols: &Tolerances,
) -> Result<SampleMatrices<F>>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    let basis = fam.basis();
    let m = spec.total_degree();
    require_degree(basis, k, m)?;
    let r = window_size(basis.dimension(), k, m)?;
    if nodes.len() != r {
        return Err(Error::SizeMismatch {
            expected: r,
            got: nodes.len(),
        });
    }
    nodes.validate(spec, tols.on_variety)?;

    let stack_polys: Vec<MPoly<F>> = (k..k + m).flat_map(|d| embedded_block(fam, d)).collect();
    let top_polys: Vec<MPoly<F>> = embedded_block(fam, k + m);

    let mut sigma = Mat::zeros(r, r);
    let mut sigma_top = Mat::zeros(top_polys.len(), r);
    for (c, entry) in nodes.entries().iter().enumerate() {
        for (i, v) in node_column(&stack_polys, entry).into_iter().enumerate() {
            *sigma.at_mut(i, c) = v;
        }
        for (i, v) in node_column(&top_polys, entry).into_iter().enumerate() {
            *sigma_top.at_mut(i, c) = v;
        }
    }
    Ok(SampleMatrices { sigma, sigma_top })
}

/// Poisedness verdict with its certificate: the exact determinant on exact
/// scalars, the smallest singular value (thresholded against the Frobenius
/// norm) on floats.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Poisedness {
    pub poised: bool,
    pub certificate: String,
    pub certificate_abs: f64,
}

pub fn poisedness<F: Scalar>(sigma: &Mat<F>, tols: &Tolerances) -> Poisedness {
    debug_assert_eq!(sigma.rows(), sigma.cols());
    if F::EXACT {
        let det = sigma.det();
        Poisedness {
            poised: !det.is_zero(),
            certificate: format!("det = {}", det.format_literal()),
            certificate_abs: det.abs_f64(),
        }
    } else {
        let sv = min_singular_value(sigma);
        let mut frob = 0.0;
        for i in 0..sigma.rows() {
            for j in 0..sigma.cols() {
                frob += sigma.at(i, j).abs_f64().powi(2);
            }
        }
        let frob = frob.sqrt();
        Poisedness {
            poised: frob > 0.0 && sv > tols.poised * frob,
            certificate: format!("min_singular_value = {sv:e}"),
            certificate_abs: sv,
        }
    }
}

/// The quasi-determinant Christoffel formula. Returns the `|[k]|` transformed
/// polynomials, monic of degree `k`, with coefficients in the node scalar.
///
/// Degenerate `m = 0` (constant `Q`) returns the original block: the
/// perturbation is a rescaling and the monic family is unchanged.
pub fn christoffel_transform<S, F>(
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    nodes: &NodeSet<F>,
    k: usize,
    tols: &Tolerances,
) -> Result<Vec<MPoly<F>>>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    let basis = fam.basis();
    let m = spec.total_degree();
    if m == 0 {
        return Ok(embedded_block(fam, k));
    }
    let samples = build_sample_matrices(fam, spec, nodes, k, tols)?;
    let verdict = poisedness(&samples.sigma, tols);
    if !verdict.poised {
        return Err(Error::NotPoised {
            certificate: verdict.certificate_abs,
        });
    }
    let inv = samples.sigma.inverse(tols.poised).ok_or(Error::NotPoised {
        certificate: verdict.certificate_abs,
    })?;
    let correction = samples.sigma_top.mul(&inv);

    let stack_polys: Vec<MPoly<F>> = (k..k + m).flat_map(|d| embedded_block(fam, d)).collect();
    let top_polys: Vec<MPoly<F>> = embedded_block(fam, k + m);

    // Bracket: P_[k+m](x) − Σ_{[k,m]} (Σ_k^m)⁻¹ P_stack(x).
    let bracket: Vec<MPoly<F>> = top_polys
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut acc = p.clone();
            for (c, q) in stack_polys.iter().enumerate() {
                acc = acc.sub(&q.scale(correction.at(i, c)));
            }
            acc
        })
        .collect();

    // Contract with the top band of Q(Λ), then divide by Q exactly.
    let ql = apply_poly_to_shift(spec.q(), basis);
    let band = ql.block(k, k + m).map_scalar(F::from_real);
    let q_embedded: MPoly<F> = spec.q().embed();
    let mut out = Vec::with_capacity(basis.block_len(k));
    for i in 0..basis.block_len(k) {
        let mut numerator = MPoly::zero(basis.dimension());
        for (j, b) in bracket.iter().enumerate() {
            numerator = numerator.add(&b.scale(band.at(i, j)));
        }
        let div_tol = tols.residual * (1.0 + numerator.max_abs_coeff());
        out.push(numerator.divide_exact(&q_embedded, div_tol)?);
    }
    Ok(out)
}

/// Projects complex-node transform output back onto the family scalar,
/// checking that imaginary parts vanish (exactly, or within the residual
/// tolerance). Returns the real polynomials and the largest imaginary
/// magnitude seen.
pub fn realize_real<S, F>(polys: &[MPoly<F>], tols: &Tolerances) -> Result<(Vec<MPoly<S>>, f64)>
where
    S: Scalar,
    F: Scalar + ComplexParts<S>,
{
    let mut worst = 0.0f64;
    let mut out = Vec::with_capacity(polys.len());
    for p in polys {
        let scale = p.max_abs_coeff();
        let mut real = MPoly::zero(p.dimension());
        for (alpha, c) in p.terms() {
            let im = c.imag_part();
            let im_mag = im.abs_f64();
            worst = worst.max(im_mag);
            if !im.is_zero_with(tols.residual * (1.0 + scale)) {
                return Err(Error::InexactDivision { residual: im_mag });
            }
            real.add_term(alpha.clone(), c.real_part());
        }
        out.push(real);
    }
    Ok((out, worst))
}

/// Multivariate (confluent) Vandermonde matrix: one column per node entry,
/// holding the directionally differentiated monomial vector `∂^j χ/∂n (p)`
/// truncated to degrees `< k+m`. Shape `N_{k+m-1} × r_{k,m}`.
pub fn vandermonde<F: Scalar>(
    basis: &GradedBasis,
    nodes: &NodeSet<F>,
    k: usize,
    m: usize,
) -> Result<Mat<F>> {
    if k + m > basis.max_degree() + 1 {
        return Err(Error::DegreeOverflow {
            needed: k + m,
            have: basis.max_degree() + 1,
        });
    }
    let height = basis.block_offset(k + m);
    let monomials: Vec<MPoly<F>> = (0..height)
        .map(|i| MPoly::monomial(basis.multiindex_at(i).clone(), F::one()))
        .collect();
    let mut v = Mat::zeros(height, nodes.len());
    for (c, entry) in nodes.entries().iter().enumerate() {
        for (i, value) in node_column(&monomials, entry).into_iter().enumerate() {
            *v.at_mut(i, c) = value;
        }
    }
    Ok(v)
}

/// Checks the factorization `Σ_k^m = S_k^m · V_k^m`; returns the maximum
/// absolute deviation (exactly zero on the rational path).
pub fn sigma_factorization_check<S, F>(
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    nodes: &NodeSet<F>,
    k: usize,
    tols: &Tolerances,
) -> Result<f64>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    let m = spec.total_degree();
    let samples = build_sample_matrices(fam, spec, nodes, k, tols)?;
    let v = vandermonde(fam.basis(), nodes, k, m)?;
    let s_window = slice_s(fam.chol().s(), k, m)?.map_scalar(F::from_real);
    Ok(max_abs_diff(&samples.sigma, &s_window.mul(&v)))
}

/// Coefficient rows of the truncated ideal `(Q)_{k+m-1}`: the first `N_{k-1}`
/// rows of `Q(Λ)` restricted to columns of degree `< k+m`. Row `α` is the
/// coefficient vector of `x^α Q(x)`. Nodes are poised only when the
/// Vandermonde column space is exactly the orthogonal complement of this row
/// space.
pub fn ideal_truncation_basis<S: Scalar>(
    spec: &DarbouxSpec<S>,
    basis: &GradedBasis,
    k: usize,
) -> Result<Mat<S>> {
    if k == 0 {
        return Err(Error::Invalid("ideal truncation needs k >= 1".into()));
    }
    let m = spec.total_degree();
    if k + m > basis.max_degree() + 1 {
        return Err(Error::DegreeOverflow {
            needed: k + m,
            have: basis.max_degree() + 1,
        });
    }
    let rows = basis.block_offset(k);
    let cols = basis.block_offset(k + m);
    let mut out = Mat::zeros(rows, cols);
    for i in 0..rows {
        let alpha = basis.multiindex_at(i);
        for j in 0..cols {
            if let Some(delta) = basis.multiindex_at(j).minus(alpha) {
                *out.at_mut(i, j) = spec.q().coeff(&delta);
            }
        }
    }
    Ok(out)
}

/// One necessary-condition check from the node-distribution propositions.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CountCheck {
    pub subject: String,
    pub count: usize,
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub ok: bool,
}

/// Necessary count conditions on a node split; violations are warnings (the
/// conditions are not sufficient for poisedness).
#[derive(Debug, Clone, serde::Serialize)]
pub struct NodeCountReport {
    pub expected_total: usize,
    pub total: usize,
    pub checks: Vec<CountCheck>,
    pub ok: bool,
    pub warnings: Vec<String>,
}

/// Applies the per-factor and per-class count bounds for degree `k`:
/// `⌈k/d_a⌉ + n_a ≤ |N_a|` (for `D > 1`; for simple factors this is the
/// classical `k + m_a ≤ n_a`), `ν^{(a,0)} ≤ r_{k+m-n_a, n_a}`, and for
/// derivative classes `ν_i^{(a,j)} ≤ N_{k+m-1} − N_{k+m-1-d}` with
/// `d = deg ∂^j(R_a^{d_a})/∂n_i`.
pub fn node_count_diagnostics<S, F>(
    spec: &DarbouxSpec<S>,
    nodes: &NodeSet<F>,
    k: usize,
) -> Result<NodeCountReport>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    let dimension = spec.dimension();
    let m = spec.total_degree();
    let expected_total = window_size(dimension, k, m)?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();

    let per_factor = nodes.counts_by_factor(spec.num_factors());
    for a in 0..spec.num_factors() {
        let n_a = spec.factor_degree(a);
        let d_a = spec.multiplicity(a) as usize;
        let lower = (dimension > 1).then(|| k.div_ceil(d_a) + n_a);
        let ok = lower.is_none_or(|lo| per_factor[a] >= lo);
        if !ok {
            warnings.push(format!(
                "factor {a}: {} nodes < required {}",
                per_factor[a],
                lower.unwrap()
            ));
        }
        checks.push(CountCheck {
            subject: format!("factor {a} total"),
            count: per_factor[a],
            lower,
            upper: None,
            ok,
        });
    }

    for class in nodes.class_counts() {
        let a = class.factor;
        let n_a = spec.factor_degree(a);
        let d_a = spec.multiplicity(a);
        let upper = if class.order == 0 {
            (m >= n_a)
                .then(|| window_size(dimension, k + m - n_a, n_a))
                .transpose()?
        } else {
            // Degree of ∂^j(R_a^{d_a})/∂n; a vanishing derivative marks a
            // forbidden direction and caps the class at zero.
            let derived: MPoly<F> = spec
                .factor(a)
                .pow(d_a)
                .embed::<F>()
                .directional_derivative(&class.direction);
            match derived.degree() {
                Some(d) if d < k + m => {
                    let n_total = cumulative_dim(dimension, (k + m) as i64 - 1)?;
                    let n_low = cumulative_dim(dimension, (k + m) as i64 - 1 - d as i64)?;
                    Some(n_total - n_low)
                }
                Some(_) => None,
                None => Some(0),
            }
        };
        let ok = upper.is_none_or(|hi| class.count <= hi);
        if !ok {
            warnings.push(format!(
                "factor {a}, order {}: {} nodes > allowed {}",
                class.order,
                class.count,
                upper.unwrap()
            ));
        }
        checks.push(CountCheck {
            subject: format!("factor {a} order {} class", class.order),
            count: class.count,
            lower: None,
            upper,
            ok,
        });
    }

    let total = nodes.len();
    let total_ok = total == expected_total;
    if !total_ok {
        warnings.push(format!(
            "node total {total} != r_{{k,m}} = {expected_total}"
        ));
    }
    let ok = total_ok && checks.iter().all(|c| c.ok);
    Ok(NodeCountReport {
        expected_total,
        total,
        checks,
        ok,
        warnings,
    })
}

/// Runs both routes and compares coefficient-for-coefficient. Returns the
/// maximum absolute deviation; exactly zero on the rational path.
pub fn verify_against_oracle<S, F>(
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    nodes: &NodeSet<F>,
    k: usize,
    tols: &Tolerances,
) -> Result<f64>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    let formula = christoffel_transform(fam, spec, nodes, k, tols)?;
    let (_, tfam) = resolvent_via_two_choleskys(fam, spec.q(), tols.singular)?;
    let oracle: Vec<MPoly<F>> = embedded_block(&tfam, k);
    let mut worst = 0.0f64;
    for (got, want) in formula.iter().zip(&oracle) {
        worst = worst.max(got.sub(want).max_abs_coeff());
    }
    Ok(worst)
}


#[cfg(test)]
mod singularity_tests {
    use super::*;
    use crate::measures::BoxMeasure;
    use crate::scalar::Rat;
    use num_traits::Zero;

    /// Putting every node on a single line of the two available (violating
    /// the lower distribution bound) forces an exactly singular sample
    /// matrix.
    #[test]
    fn all_nodes_on_one_line_is_singular() {
        let one = Rat::from_int(1);
        let m = BoxMeasure::uniform(vec![(-one.clone(), one.clone()), (-one.clone(), one)]);
        let fam = MVOPRFamily::compute(Arc::new(m), 5, 0.0).unwrap();
        let spec = DarbouxSpec::new(vec![
            (MPoly::parse("2 - x1", 2).unwrap(), 1),
            (MPoly::parse("2 - x2", 2).unwrap(), 1),
        ])
        .unwrap();
        for k in 0..=1usize {
            let r = crate::graded_basis::window_size(2, k, 2).unwrap();
            let entries: Vec<NodeEntry<Rat>> = (0..r)
                .map(|i| {
                    NodeEntry::plain(
                        vec![Rat::from_int(2), Rat::from_ratio(i as i64 * 2 + 1, 3)],
                        0,
                    )
                })
                .collect();
            let nodes = NodeSet::new(entries);
            let samples =
                build_sample_matrices(&fam, &spec, &nodes, k, &Tolerances::default()).unwrap();
            assert!(samples.sigma.det().is_zero(), "k = {k}");
            let report = node_count_diagnostics(&spec, &nodes, k).unwrap();
            assert!(!report.ok);
        }
    }
}


#[cfg(test)]
mod adjoint_tests {
    use super::*;
    use crate::measures::BoxMeasure;
    use crate::scalar::Rat;

    /// The adjoint connects back to the resolvent: ω = (TH) Mᵀ H⁻¹.
    #[test]
    fn omega_from_adjoint_transpose() {
        let one = Rat::from_int(1);
        let m = BoxMeasure::uniform(vec![(-one.clone(), one.clone()), (-one.clone(), one)]);
        let fam = MVOPRFamily::compute(Arc::new(m), 5, 0.0).unwrap();
        let q = MPoly::parse("4 - 2*x1 - 2*x2 + x1*x2", 2).unwrap();
        let (res, tfam) = resolvent_via_two_choleskys(&fam, &q, 0.0).unwrap();
        let basis = fam.basis();
        let th = tfam.chol().h_full();
        let mut h_inv = BlockMatrix::zero(basis.clone());
        for k in 0..=basis.max_degree() {
            h_inv.set_block(k, k, fam.chol().h_inv_block(k));
        }
        let rhs = th.mat().mul(&res.adjoint.mat().transpose()).mul(h_inv.mat());
        let rows = basis.block_offset(res.omega.valid_blocks());
        assert_eq!(
            res.omega.mat().submatrix(0..rows, 0..basis.len()),
            rhs.submatrix(0..rows, 0..basis.len())
        );
    }
}
