//! Degree-blocked matrices, block Cholesky factorization of moment matrices,
//! and last quasi-determinants.
//!
//! Storage is dense; desk-scale truncations (a few hundred positions) need
//! nothing sparser, and exactness beats speed here. Every [`BlockMatrix`]
//! carries two pieces of metadata next to its data:
//!
//! * `valid_blocks` — how many leading block rows agree with the untruncated
//!   semi-infinite operator. Products shrink it: a row of `A·B` is trusted
//!   only when every block it depends on lies inside both truncations.
//! * a band over-approximation `[lo, hi]` — blocks outside `[k+lo, k+hi]` in
//!   block row `k` are exactly zero.
//!
//! Silent boundary garbage is the classic bug in truncated operator calculus;
//! the metadata makes the trustworthy range explicit.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graded_basis::GradedBasis;
use crate::measures::MomentFunctional;
use crate::scalar::Scalar;

/// Dense row-major matrix over a scalar field.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<S: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        debug_assert!(rows.iter().all(|row| row.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut S {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    /// Entry-wise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| {
            self.at(rows.start + i, cols.start + j).clone()
        })
    }

    pub fn hstack(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.at(i, j).clone()
            } else {
                other.at(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.cols);
        Self::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.at(i, j).clone()
            } else {
                other.at(i - self.rows, j).clone()
            }
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.at(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(l, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.at(i, j).clone();
                    *out.at_mut(i, j) = cur + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for j in 0..self.cols {
                    acc = acc + self.at(i, j).clone() * v[j].clone();
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() + other.at(i, j).clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() - other.at(i, j).clone()
        })
    }

    pub fn neg(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| -self.at(i, j).clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() * c.clone()
        })
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }

    fn pivot_threshold(&self, tol: f64) -> f64 {
        if S::EXACT {
            0.0
        } else {
            let scale = self.max_abs();
            tol * if scale > 0.0 { scale } else { 1.0 }
        }
    }

    /// Gauss–Jordan inverse. Exact scalars pivot on the first structurally
    /// nonzero entry; floats pivot on the largest magnitude and declare
    /// singularity below `tol × max|entry|`. `None` when singular.
    pub fn inverse(&self, tol: f64) -> Option<Self> {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let threshold = self.pivot_threshold(tol);
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = if S::EXACT {
                (col..n).find(|&r| !a.at(r, col).is_zero())
            } else {
                (col..n)
                    .max_by(|&p, &q| {
                        a.at(p, col)
                            .abs_f64()
                            .partial_cmp(&a.at(q, col).abs_f64())
                            .unwrap()
                    })
                    .filter(|&r| a.at(r, col).abs_f64() > threshold)
            }?;
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(pivot_row * n + j, col * n + j);
                    inv.data.swap(pivot_row * n + j, col * n + j);
                }
            }
            let pivot = a.at(col, col).clone();
            for j in 0..n {
                *a.at_mut(col, j) = a.at(col, j).clone() / pivot.clone();
                *inv.at_mut(col, j) = inv.at(col, j).clone() / pivot.clone();
            }
            for r in 0..n {
                if r == col || a.at(r, col).is_zero() {
                    continue;
                }
                let factor = a.at(r, col).clone();
                for j in 0..n {
                    let av = a.at(col, j).clone();
                    let iv = inv.at(col, j).clone();
                    *a.at_mut(r, j) = a.at(r, j).clone() - factor.clone() * av;
                    *inv.at_mut(r, j) = inv.at(r, j).clone() - factor.clone() * iv;
                }
            }
        }
        Some(inv)
    }

    /// Determinant by Gaussian elimination; exact over exact scalars.
    pub fn det(&self) -> S {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot_row = if S::EXACT {
                (col..n).find(|&r| !a.at(r, col).is_zero())
            } else {
                (col..n)
                    .max_by(|&p, &q| {
                        a.at(p, col)
                            .abs_f64()
                            .partial_cmp(&a.at(q, col).abs_f64())
                            .unwrap()
                    })
                    .filter(|&r| !a.at(r, col).is_zero())
            };
            let Some(pivot_row) = pivot_row else {
                return S::zero();
            };
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(pivot_row * n + j, col * n + j);
                }
                det = -det;
            }
            let pivot = a.at(col, col).clone();
            det = det * pivot.clone();
            for r in col + 1..n {
                if a.at(r, col).is_zero() {
                    continue;
                }
                let factor = a.at(r, col).clone() / pivot.clone();
                for j in col..n {
                    let v = a.at(col, j).clone();
                    *a.at_mut(r, j) = a.at(r, j).clone() - factor.clone() * v;
                }
            }
        }
        det
    }

    /// Row-echelon rank with the same pivoting policy as [`Mat::inverse`].
    pub fn rank(&self, tol: f64) -> usize {
        let threshold = self.pivot_threshold(tol);
        let mut a = self.clone();
        let (rows, cols) = (a.rows, a.cols);
        let mut rank = 0;
        for col in 0..cols {
            let pivot_row = if S::EXACT {
                (rank..rows).find(|&r| !a.at(r, col).is_zero())
            } else {
                (rank..rows)
                    .max_by(|&p, &q| {
                        a.at(p, col)
                            .abs_f64()
                            .partial_cmp(&a.at(q, col).abs_f64())
                            .unwrap()
                    })
                    .filter(|&r| a.at(r, col).abs_f64() > threshold)
            };
            let Some(pivot_row) = pivot_row else {
                continue;
            };
            if pivot_row != rank {
                for j in 0..cols {
                    a.data.swap(pivot_row * cols + j, rank * cols + j);
                }
            }
            let pivot = a.at(rank, col).clone();
            for r in rank + 1..rows {
                if a.at(r, col).is_zero() {
                    continue;
                }
                let factor = a.at(r, col).clone() / pivot.clone();
                for j in col..cols {
                    let v = a.at(rank, j).clone();
                    *a.at_mut(r, j) = a.at(r, j).clone() - factor.clone() * v;
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }

    /// A basis of the right kernel `{v : Av = 0}`.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<S>> {
        let threshold = self.pivot_threshold(tol);
        let mut a = self.clone();
        let (rows, cols) = (a.rows, a.cols);
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for col in 0..cols {
            let pivot_row = if S::EXACT {
                (r..rows).find(|&i| !a.at(i, col).is_zero())
            } else {
                (r..rows)
                    .max_by(|&p, &q| {
                        a.at(p, col)
                            .abs_f64()
                            .partial_cmp(&a.at(q, col).abs_f64())
                            .unwrap()
                    })
                    .filter(|&i| a.at(i, col).abs_f64() > threshold)
            };
            let Some(pivot_row) = pivot_row else {
                continue;
            };
            if pivot_row != r {
                for j in 0..cols {
                    a.data.swap(pivot_row * cols + j, r * cols + j);
                }
            }
            let pivot = a.at(r, col).clone();
            for j in 0..cols {
                *a.at_mut(r, j) = a.at(r, j).clone() / pivot.clone();
            }
            for i in 0..rows {
                if i == r || a.at(i, col).is_zero() {
                    continue;
                }
                let factor = a.at(i, col).clone();
                for j in 0..cols {
                    let v = a.at(r, j).clone();
                    *a.at_mut(i, j) = a.at(i, j).clone() - factor.clone() * v;
                }
            }
            pivot_cols.push(col);
            r += 1;
            if r == rows {
                break;
            }
        }
        let mut basis = Vec::new();
        for free in 0..cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut v = vec![S::zero(); cols];
            v[free] = S::one();
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -a.at(row, free).clone();
            }
            basis.push(v);
        }
        basis
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Smallest singular value, estimated in `f64` through the real embedding
/// `[[Re, -Im], [Im, Re]]` (whose singular values are those of the original
/// matrix, doubled in multiplicity) followed by cyclic Jacobi iteration on
/// `BᵀB`.
pub fn min_singular_value<S: Scalar>(m: &Mat<S>) -> f64 {
    let (r, c) = (m.rows(), m.cols());
    if r == 0 || c == 0 {
        return 0.0;
    }
    let mut b = vec![vec![0.0f64; 2 * c]; 2 * r];
    for i in 0..r {
        for j in 0..c {
            let re = m.at(i, j).re_f64();
            let im = m.at(i, j).im_f64();
            b[i][j] = re;
            b[i][j + c] = -im;
            b[i + r][j] = im;
            b[i + r][j + c] = re;
        }
    }
    let n = 2 * c;
    let mut g = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..2 * r {
                acc += b[k][i] * b[k][j];
            }
            g[i][j] = acc;
        }
    }
    let min_eig = jacobi_min_eigenvalue(g);
    min_eig.max(0.0).sqrt()
}

fn jacobi_min_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let frob: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= 1e-15 * frob.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Square matrix truncated to degree `L`, addressed by degree blocks.
#[derive(Clone, Debug)]
pub struct BlockMatrix<S: Scalar> {
    basis: Arc<GradedBasis>,
    mat: Mat<S>,
    valid_blocks: usize,
    band_lo: i64,
    band_hi: i64,
}

impl<S: Scalar> BlockMatrix<S> {
    pub fn from_mat(
        basis: Arc<GradedBasis>,
        mat: Mat<S>,
        valid_blocks: usize,
        band_lo: i64,
        band_hi: i64,
    ) -> Self {
        debug_assert_eq!(mat.rows(), basis.len());
        debug_assert_eq!(mat.cols(), basis.len());
        BlockMatrix {
            basis,
            mat,
            valid_blocks,
            band_lo,
            band_hi,
        }
    }

    pub fn zero(basis: Arc<GradedBasis>) -> Self {
        let n = basis.len();
        Self::from_mat(basis, Mat::zeros(n, n), usize::MAX, 0, 0)
    }

    pub fn identity(basis: Arc<GradedBasis>) -> Self {
        let n = basis.len();
        let nb = basis.max_degree() + 1;
        let mut out = Self::from_mat(basis, Mat::identity(n), nb, 0, 0);
        out.valid_blocks = nb;
        out
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn mat(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn mat_mut(&mut self) -> &mut Mat<S> {
        &mut self.mat
    }

    /// Number of block rows stored (`L + 1`).
    pub fn nblocks(&self) -> usize {
        self.basis.max_degree() + 1
    }

    /// Leading block rows that agree with the untruncated operator.
    pub fn valid_blocks(&self) -> usize {
        self.valid_blocks.min(self.nblocks())
    }

    pub fn band(&self) -> (i64, i64) {
        (self.band_lo, self.band_hi)
    }

    pub fn block(&self, k: usize, l: usize) -> Mat<S> {
        self.mat
            .submatrix(self.basis.block_range(k), self.basis.block_range(l))
    }

    pub fn set_block(&mut self, k: usize, l: usize, b: &Mat<S>) {
        let rr = self.basis.block_range(k);
        let cc = self.basis.block_range(l);
        debug_assert_eq!(b.rows(), rr.len());
        debug_assert_eq!(b.cols(), cc.len());
        for (bi, i) in rr.enumerate() {
            for (bj, j) in cc.clone().enumerate() {
                *self.mat.at_mut(i, j) = b.at(bi, bj).clone();
            }
        }
    }

    /// Truncated product with validity and band propagation.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert!(Arc::ptr_eq(&self.basis, &other.basis));
        let nb = self.nblocks() as i64;
        let valid = (self.valid_blocks() as i64)
            .min(nb - self.band_hi.max(0))
            .min(other.valid_blocks() as i64 - self.band_hi)
            .clamp(0, nb) as usize;
        BlockMatrix {
            basis: self.basis.clone(),
            mat: self.mat.mul(&other.mat),
            valid_blocks: valid,
            band_lo: (self.band_lo + other.band_lo).max(-(nb - 1)),
            band_hi: (self.band_hi + other.band_hi).min(nb - 1),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(Arc::ptr_eq(&self.basis, &other.basis));
        BlockMatrix {
            basis: self.basis.clone(),
            mat: self.mat.add(&other.mat),
            valid_blocks: self.valid_blocks().min(other.valid_blocks()),
            band_lo: self.band_lo.min(other.band_lo),
            band_hi: self.band_hi.max(other.band_hi),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&BlockMatrix {
            basis: other.basis.clone(),
            mat: other.mat.neg(),
            valid_blocks: other.valid_blocks,
            band_lo: other.band_lo,
            band_hi: other.band_hi,
        })
    }

    /// Leading dense truncation over blocks `0..k` (size `N_{k-1}`).
    pub fn leading_truncation(&self, k: usize) -> Mat<S> {
        let n = self.basis.block_offset(k);
        self.mat.submatrix(0..n, 0..n)
    }

    pub fn scale(&self, c: &S) -> Self {
        BlockMatrix {
            basis: self.basis.clone(),
            mat: self.mat.scale(c),
            valid_blocks: self.valid_blocks,
            band_lo: self.band_lo,
            band_hi: self.band_hi,
        }
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BlockMatrix<T> {
        BlockMatrix {
            basis: self.basis.clone(),
            mat: self.mat.map_scalar(f),
            valid_blocks: self.valid_blocks,
            band_lo: self.band_lo,
            band_hi: self.band_hi,
        }
    }
}

/// `G` truncated to the basis degree: `G_{α,β} = moment(α + β)`. Symmetric by
/// construction; fully valid.
pub fn build_moment_matrix<S: Scalar>(
    measure: &dyn MomentFunctional<S>,
    basis: &Arc<GradedBasis>,
) -> BlockMatrix<S> {
    let n = basis.len();
    let mat = Mat::from_fn(n, n, |i, j| {
        measure.moment(&basis.multiindex_at(i).plus(basis.multiindex_at(j)))
    });
    let nb = basis.max_degree() as i64;
    BlockMatrix::from_mat(basis.clone(), mat, basis.max_degree() + 1, -nb, nb)
}

/// Block Cholesky data `G = S⁻¹ H S⁻ᵀ`: `S` lower unitriangular by degree
/// blocks, `H` block diagonal with invertible blocks.
#[derive(Clone, Debug)]
pub struct CholeskyResult<S: Scalar> {
    s: BlockMatrix<S>,
    s_inv: BlockMatrix<S>,
    h: Vec<Mat<S>>,
    h_inv: Vec<Mat<S>>,
}

impl<S: Scalar> CholeskyResult<S> {
    /// Rebuilds the full factorization data from `S` and the `H` blocks
    /// (deserialization path). `S` must be block lower-unitriangular and
    /// every `H` block invertible.
    pub fn from_parts(s: BlockMatrix<S>, h: Vec<Mat<S>>, tol: f64) -> Result<Self> {
        let basis = s.basis().clone();
        for k in 0..=basis.max_degree() {
            if s.block(k, k) != Mat::identity(basis.block_len(k)) {
                return Err(Error::Invalid(format!(
                    "S diagonal block {k} is not the identity"
                )));
            }
        }
        if h.len() != basis.max_degree() + 1 {
            return Err(Error::SizeMismatch {
                expected: basis.max_degree() + 1,
                got: h.len(),
            });
        }
        let mut h_inv = Vec::with_capacity(h.len());
        for (k, block) in h.iter().enumerate() {
            h_inv.push(
                block
                    .inverse(tol)
                    .ok_or(Error::SingularBlock { degree: k })?,
            );
        }
        let s_inv = invert_unitriangular(&s);
        Ok(CholeskyResult { s, s_inv, h, h_inv })
    }

    pub fn s(&self) -> &BlockMatrix<S> {
        &self.s
    }

    pub fn s_inv(&self) -> &BlockMatrix<S> {
        &self.s_inv
    }

    pub fn max_degree(&self) -> usize {
        self.s.basis().max_degree()
    }

    pub fn h_block(&self, k: usize) -> &Mat<S> {
        &self.h[k]
    }

    pub fn h_inv_block(&self, k: usize) -> &Mat<S> {
        &self.h_inv[k]
    }

    pub fn h_blocks(&self) -> &[Mat<S>] {
        &self.h
    }

    /// `H` assembled as a block diagonal matrix.
    pub fn h_full(&self) -> BlockMatrix<S> {
        let basis = self.s.basis().clone();
        let mut out = BlockMatrix::zero(basis.clone());
        for (k, b) in self.h.iter().enumerate() {
            out.set_block(k, k, b);
        }
        out.valid_blocks = basis.max_degree() + 1;
        out
    }

    /// `S⁻¹ H S⁻ᵀ`, for reconstruction checks.
    pub fn reconstruct(&self) -> Mat<S> {
        let h = self.h_full();
        self.s_inv
            .mat()
            .mul(h.mat())
            .mul(&self.s_inv.mat().transpose())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> CholeskyResult<T> {
        CholeskyResult {
            s: self.s.map_scalar(f),
            s_inv: self.s_inv.map_scalar(f),
            h: self.h.iter().map(|m| m.map_scalar(f)).collect(),
            h_inv: self.h_inv.iter().map(|m| m.map_scalar(f)).collect(),
        }
    }
}

/// Degree-by-degree Schur-complement recursion for `G = S⁻¹ H S⁻ᵀ`.
///
/// Fails with `SingularBlock(k)` when `H_[k]` is not invertible — the measure
/// has no orthogonal family at that degree.
pub fn block_cholesky<S: Scalar>(g: &BlockMatrix<S>, tol: f64) -> Result<CholeskyResult<S>> {
    let basis = g.basis().clone();
    let top = basis.max_degree();
    // a = S⁻¹, built column-block by column-block.
    let mut a = BlockMatrix::identity(basis.clone());
    let mut h: Vec<Mat<S>> = Vec::with_capacity(top + 1);
    let mut h_inv: Vec<Mat<S>> = Vec::with_capacity(top + 1);
    for j in 0..=top {
        let mut hj = g.block(j, j);
        for l in 0..j {
            let ajl = a.block(j, l);
            hj = hj.sub(&ajl.mul(&h[l]).mul(&ajl.transpose()));
        }
        let inv = hj.inverse(tol).ok_or(Error::SingularBlock { degree: j })?;
        for i in j + 1..=top {
            let mut c = g.block(i, j);
            for l in 0..j {
                c = c.sub(&a.block(i, l).mul(&h[l]).mul(&a.block(j, l).transpose()));
            }
            a.set_block(i, j, &c.mul(&inv));
        }
        h.push(hj);
        h_inv.push(inv);
    }
    let nb = top as i64;
    a.band_lo = -nb;
    a.band_hi = 0;
    a.valid_blocks = top + 1;
    let s = invert_unitriangular(&a);
    Ok(CholeskyResult {
        s,
        s_inv: a,
        h,
        h_inv,
    })
}

/// Last quasi-determinant of `[[A, B], [C, D]]` with `A` the leading
/// `split × split` block: the Schur complement `D − C A⁻¹ B`.
pub fn last_quasi_determinant<S: Scalar>(m: &Mat<S>, split: usize, tol: f64) -> Result<Mat<S>> {
    debug_assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    debug_assert!(split <= n);
    let a = m.submatrix(0..split, 0..split);
    let a_inv = a.inverse(tol).ok_or(Error::SingularLeadingBlock)?;
    let b = m.submatrix(0..split, split..n);
    let c = m.submatrix(split..n, 0..split);
    let d = m.submatrix(split..n, split..n);
    Ok(d.sub(&c.mul(&a_inv).mul(&b)))
}

/// `Θ*(G^{[k+1]})`: the last quasi-determinant of the truncation through
/// degree `k`, partitioned at `N_{k-1}`. Equals `H_[k]`.
pub fn theta_star_truncation<S: Scalar>(g: &BlockMatrix<S>, k: usize, tol: f64) -> Result<Mat<S>> {
    let basis = g.basis();
    let n = basis.block_offset(k + 1);
    let split = basis.block_offset(k);
    last_quasi_determinant(&g.mat().submatrix(0..n, 0..n), split, tol)
}

/// Exact inverse of a block lower-unitriangular matrix by forward
/// substitution; the result is again unitriangular.
pub fn invert_unitriangular<S: Scalar>(s: &BlockMatrix<S>) -> BlockMatrix<S> {
    let basis = s.basis().clone();
    let top = basis.max_degree();
    let mut x = BlockMatrix::identity(basis.clone());
    for i in 0..=top {
        for j in (0..i).rev() {
            // X[i][j] = -Σ_{l=j}^{i-1} S[i][l] X[l][j]
            let mut acc = Mat::zeros(basis.block_len(i), basis.block_len(j));
            for l in j..i {
                acc = acc.add(&s.block(i, l).mul(&x.block(l, j)));
            }
            x.set_block(i, j, &acc.neg());
        }
    }
    x.band_lo = -(top as i64);
    x.band_hi = 0;
    x.valid_blocks = top + 1;
    x
}

/// The window `S_k^m`: rows of `S` for degrees `k..k+m-1`, columns for degrees
/// `0..k+m-1`. Shape `r_{k,m} × N_{k+m-1}`; the trailing square is
/// unitriangular.
pub fn slice_s<S: Scalar>(s: &BlockMatrix<S>, k: usize, m: usize) -> Result<Mat<S>> {
    let basis = s.basis();
    if k + m > basis.max_degree() + 1 {
        return Err(Error::DegreeOverflow {
            needed: k + m,
            have: basis.max_degree() + 1,
        });
    }
    let lo = basis.block_offset(k);
    let hi = basis.block_offset(k + m);
    Ok(s.mat().submatrix(lo..hi, 0..hi))
}


#[cfg(test)]
mod perturbation_tests {
    use super::*;
    use crate::measures::{perturb, BoxMeasure, MomentFunctional};
    use crate::mvopr::apply_poly_to_shift;
    use crate::poly::MPoly;
    use crate::scalar::Rat;
    use num_traits::Zero;

    /// The perturbed moment matrix equals Q(Λ)·G on every block whose row
    /// degree + deg Q fits the truncation, exactly.
    #[test]
    fn perturbed_moments_equal_shift_action() {
        let one = Rat::from_int(1);
        let base: std::sync::Arc<dyn MomentFunctional<Rat>> =
            std::sync::Arc::new(BoxMeasure::uniform(vec![
                (-one.clone(), one.clone()),
                (-one.clone(), one),
            ]));
        let basis = Arc::new(GradedBasis::new(2, 5).unwrap());
        let g = build_moment_matrix(base.as_ref(), &basis);
        for q_text in ["4 - 2*x1 - 2*x2 + x1*x2", "4 - 4*x1 + x1^2", "1 + x2^3"] {
            let q = MPoly::parse(q_text, 2).unwrap();
            let tm = perturb(base.clone(), q.clone()).unwrap();
            let tg = build_moment_matrix(&tm, &basis);
            let ql = apply_poly_to_shift(&q, &basis);
            let product = ql.mul(&g);
            let rows = basis.block_offset(product.valid_blocks());
            assert_eq!(
                tg.mat().submatrix(0..rows, 0..basis.len()),
                product.mat().submatrix(0..rows, 0..basis.len()),
                "Q = {q_text}"
            );
        }
    }

    #[test]
    fn float_reconstruction_within_tolerance() {
        let m = BoxMeasure::uniform(vec![(-1.0f64, 1.0), (-1.0, 1.0)]);
        let basis = Arc::new(GradedBasis::new(2, 6).unwrap());
        let g = build_moment_matrix(&m, &basis);
        let chol = block_cholesky(&g, 1e-10).unwrap();
        let diff = chol.reconstruct().sub(g.mat()).max_abs();
        assert!(diff <= 1e-12 * g.mat().max_abs(), "relative error {diff:e}");
    }

    #[test]
    fn single_point_moment_matrix_content() {
        use crate::measures::DiscreteMeasure;
        let m = DiscreteMeasure::new(
            vec![vec![Rat::from_int(0), Rat::from_int(0)]],
            vec![Rat::from_int(1)],
        )
        .unwrap();
        let basis = Arc::new(GradedBasis::new(2, 1).unwrap());
        let g = build_moment_matrix(&m, &basis);
        assert_eq!(g.mat().at(0, 0), &Rat::from_int(1));
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (0, 0) {
                    assert!(g.mat().at(i, j).is_zero());
                }
            }
        }
        assert_eq!(g.mat().rank(0.0), 1);
    }
}
