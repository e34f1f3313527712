//! Multi-indices ordered by total degree, and the position ↔ multi-index
//! bijection behind every blocked matrix in the crate.
//!
//! Monomials of total degree `k` form the block `[k]` with `|[k]| = C(D+k-1,k)`
//! entries; `N_k = C(D+k, D)` positions precede degree `k+1`. Within a degree
//! block the crate fixes one convention once and for all: entries are sorted by
//! lexicographically decreasing exponent vector, so for `D = 2` the block `[k]`
//! reads `x^k, x^(k-1) y, …, y^k`. All scalar outputs of the pipeline are
//! invariant under within-block permutations (the diagonal blocks of the
//! Cholesky factor are identities); a test in `block_linalg` checks that.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Exponent vector `α = (α_1, …, α_D)` of a monomial `x^α`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(dimension: usize) -> Self {
        MultiIndex(vec![0; dimension])
    }

    /// The unit multi-index `e_a` (axis is zero-based).
    pub fn unit(dimension: usize, axis: usize) -> Self {
        let mut c = vec![0; dimension];
        c[axis] = 1;
        MultiIndex(c)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α + e_a`.
    pub fn shifted(&self, axis: usize) -> Self {
        let mut c = self.0.clone();
        c[axis] += 1;
        MultiIndex(c)
    }

    /// Componentwise sum.
    pub fn plus(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dimension(), other.dimension());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference, `None` unless `other ≤ self` everywhere.
    pub fn minus(&self, other: &Self) -> Option<Self> {
        if self.0.iter().zip(&other.0).any(|(a, b)| a < b) {
            return None;
        }
        Some(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Total order: lower total degree first; within a degree block,
    /// lexicographically decreasing exponent vectors.
    pub fn compare(a: &Self, b: &Self) -> Result<Ordering> {
        if a.dimension() != b.dimension() {
            return Err(Error::DimensionMismatch {
                expected: a.dimension(),
                got: b.dimension(),
            });
        }
        Ok(a.cmp(b))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.dimension(), other.dimension());
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn binomial(n: u64, k: u64) -> Result<usize> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul((n - k + i) as u128)
            .ok_or_else(|| Error::Capacity(format!("C({n},{k})")))?;
        acc /= i as u128;
    }
    usize::try_from(acc).map_err(|_| Error::Capacity(format!("C({n},{k})")))
}

/// `|[k]| = C(D+k-1, k)`: monomials of total degree exactly `k` in `D` variables.
pub fn block_size(dimension: usize, k: usize) -> Result<usize> {
    debug_assert!(dimension >= 1);
    binomial((dimension + k - 1) as u64, k as u64)
}

/// `N_k = C(D+k, D)`: monomials of total degree at most `k`; `N_{-1} = 0`.
pub fn cumulative_dim(dimension: usize, k: i64) -> Result<usize> {
    debug_assert!(dimension >= 1);
    if k < 0 {
        return Ok(0);
    }
    binomial(dimension as u64 + k as u64, dimension as u64)
}

/// `r_{k,m} = N_{k+m-1} - N_{k-1} = |[k]| + … + |[k+m-1]|`; zero for the
/// degenerate `m = 0` window.
pub fn window_size(dimension: usize, k: usize, m: usize) -> Result<usize> {
    let hi = cumulative_dim(dimension, (k + m) as i64 - 1)?;
    let lo = cumulative_dim(dimension, k as i64 - 1)?;
    Ok(hi - lo)
}

/// The block `[k]` in canonical order (lexicographically decreasing).
pub fn enumerate_block(dimension: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(dimension: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if dimension == 1 {
            prefix.push(k);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first);
            rec(dimension - 1, k - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dimension, k as u32, &mut Vec::new(), &mut out);
    out
}

/// All multi-indices of degree `0..=L` in one flat list with block offsets.
///
/// `offsets[k] = N_{k-1}` positions precede degree `k`; `offsets[L+1] = N_L`
/// closes the last block. Immutable after construction.
#[derive(Debug, Clone)]
pub struct GradedBasis {
    dimension: usize,
    max_degree: usize,
    list: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
    offsets: Vec<usize>,
}

impl GradedBasis {
    pub fn new(dimension: usize, max_degree: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("dimension must be >= 1".into()));
        }
        let mut list = Vec::new();
        let mut offsets = Vec::with_capacity(max_degree + 2);
        for k in 0..=max_degree {
            offsets.push(list.len());
            list.extend(enumerate_block(dimension, k));
        }
        offsets.push(list.len());
        // Cross-check the enumeration against the closed-form counts.
        for k in 0..=max_degree {
            debug_assert_eq!(offsets[k + 1] - offsets[k], block_size(dimension, k)?);
        }
        let positions = list
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        Ok(GradedBasis {
            dimension,
            max_degree,
            list,
            positions,
            offsets,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Total number of positions, `N_L`.
    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multiindex_at(&self, position: usize) -> &MultiIndex {
        &self.list[position]
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.positions.get(alpha).copied()
    }

    /// First position of block `[k]`, i.e. `N_{k-1}`.
    pub fn block_offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn block_len(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn block(&self, k: usize) -> &[MultiIndex] {
        &self.list[self.block_range(k)]
    }

    /// Position of `α + e_a`; errors past the truncation degree.
    pub fn shifted_position(&self, alpha: &MultiIndex, axis: usize) -> Result<usize> {
        if alpha.degree() + 1 > self.max_degree {
            return Err(Error::DegreeOverflow {
                needed: alpha.degree() + 1,
                have: self.max_degree,
            });
        }
        let shifted = alpha.shifted(axis);
        self.index_of(&shifted).ok_or(Error::Invalid(format!(
            "{shifted} not in basis (dimension mismatch?)"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sizes_match_closed_forms() {
        assert_eq!(block_size(2, 3).unwrap(), 4);
        assert_eq!(block_size(1, 7).unwrap(), 1);
        assert_eq!(block_size(3, 2).unwrap(), 6);
    }

    #[test]
    fn capacity_overflow_is_an_error() {
        assert!(matches!(
            block_size(4, usize::MAX / 2),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn cumulative_dims_match_closed_forms() {
        assert_eq!(cumulative_dim(2, 3).unwrap(), 10);
        assert_eq!(cumulative_dim(2, -1).unwrap(), 0);
        assert_eq!(cumulative_dim(4, 2).unwrap(), 15);
    }

    #[test]
    fn window_sizes() {
        assert_eq!(window_size(2, 0, 2).unwrap(), 3);
        assert_eq!(window_size(2, 1, 2).unwrap(), 5);
        assert_eq!(window_size(3, 2, 1).unwrap(), 6);
    }

    #[test]
    fn window_size_formulas_agree() {
        for d in 1..=4 {
            for k in 0..=8usize {
                let mut total = 0;
                for m in 1..=8usize {
                    total += block_size(d, k + m - 1).unwrap();
                    assert_eq!(window_size(d, k, m).unwrap(), total, "D={d} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn block_sizes_sum_to_cumulative_dim() {
        for d in 1..=4 {
            for k in 0..=8usize {
                let sum: usize = (0..=k).map(|j| block_size(d, j).unwrap()).sum();
                assert_eq!(sum, cumulative_dim(d, k as i64).unwrap());
            }
        }
    }

    #[test]
    fn compare_follows_the_documented_convention() {
        let a = MultiIndex::new(vec![1, 0]);
        let b = MultiIndex::new(vec![0, 1]);
        assert_eq!(MultiIndex::compare(&a, &b).unwrap(), Ordering::Less);
        let c = MultiIndex::new(vec![0, 2]);
        let d = MultiIndex::new(vec![1, 0]);
        assert_eq!(MultiIndex::compare(&d, &c).unwrap(), Ordering::Less);
        let e = MultiIndex::new(vec![2, 1]);
        assert_eq!(MultiIndex::compare(&e, &e).unwrap(), Ordering::Equal);
        assert!(MultiIndex::compare(&a, &MultiIndex::new(vec![1, 0, 0])).is_err());
    }

    #[test]
    fn degree_two_block_order() {
        let block = enumerate_block(2, 2);
        let expect: Vec<MultiIndex> = [[2, 0], [1, 1], [0, 2]]
            .iter()
            .map(|c| MultiIndex::new(c.to_vec()))
            .collect();
        assert_eq!(block, expect);
    }

    #[test]
    fn positions_round_trip() {
        for d in 1..=4 {
            let basis = GradedBasis::new(d, 8).unwrap();
            for p in 0..basis.len() {
                assert_eq!(basis.index_of(basis.multiindex_at(p)), Some(p));
            }
            // Basis order is exactly the comparator's order.
            for p in 1..basis.len() {
                assert!(basis.multiindex_at(p - 1) < basis.multiindex_at(p));
            }
        }
    }

    #[test]
    fn offsets_match_cumulative_dims() {
        let basis = GradedBasis::new(3, 6).unwrap();
        for k in 0..=6usize {
            assert_eq!(
                basis.block_offset(k),
                cumulative_dim(3, k as i64 - 1).unwrap()
            );
        }
    }

    #[test]
    fn shifted_positions() {
        let basis = GradedBasis::new(2, 4).unwrap();
        let origin = MultiIndex::zero(2);
        assert_eq!(
            basis.multiindex_at(basis.shifted_position(&origin, 0).unwrap()),
            &MultiIndex::new(vec![1, 0])
        );
        let a = MultiIndex::new(vec![1, 1]);
        assert_eq!(
            basis.multiindex_at(basis.shifted_position(&a, 1).unwrap()),
            &MultiIndex::new(vec![1, 2])
        );
        let basis3 = GradedBasis::new(3, 4).unwrap();
        let b = MultiIndex::new(vec![0, 0, 2]);
        assert_eq!(
            basis3.multiindex_at(basis3.shifted_position(&b, 2).unwrap()),
            &MultiIndex::new(vec![0, 0, 3])
        );
        // Degree overflow past truncation.
        let top = MultiIndex::new(vec![4, 0]);
        assert!(matches!(
            basis.shifted_position(&top, 0),
            Err(Error::DegreeOverflow { .. })
        ));
    }
}
