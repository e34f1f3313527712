//! Sparse multivariate polynomials over a pluggable scalar, with the
//! higher-order directional derivative operators used by confluent node sets.
//!
//! Terms live in a `BTreeMap` keyed by [`MultiIndex`], so iteration follows the
//! graded basis order and the leading term (for division) is the last entry.
//! No zero coefficients are ever stored.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graded_basis::{enumerate_block, MultiIndex};
use crate::scalar::{FromReal, Scalar};

/// Sparse multivariate polynomial. The zero polynomial has `degree() == None`.
#[derive(Clone, PartialEq, Debug)]
pub struct MPoly<S: Scalar> {
    dimension: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> MPoly<S> {
    pub fn zero(dimension: usize) -> Self {
        MPoly {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dimension: usize, c: S) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(MultiIndex::zero(dimension), c);
        p
    }

    pub fn one(dimension: usize) -> Self {
        Self::constant(dimension, S::one())
    }

    pub fn monomial(alpha: MultiIndex, c: S) -> Self {
        let mut p = Self::zero(alpha.dimension());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate polynomial `x_a` (axis is zero-based).
    pub fn variable(dimension: usize, axis: usize) -> Self {
        Self::monomial(MultiIndex::unit(dimension, axis), S::one())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|a| a.degree()).max()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> S {
        self.terms.get(alpha).cloned().unwrap_or_else(S::zero)
    }

    /// Adds `c · x^α`, merging like terms and dropping exact zeros.
    pub fn add_term(&mut self, alpha: MultiIndex, c: S) {
        debug_assert_eq!(alpha.dimension(), self.dimension);
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&alpha) {
            Some(old) => {
                let merged = old + c;
                if !merged.is_zero() {
                    self.terms.insert(alpha, merged);
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    /// Greatest term in the monomial order, `(α, coefficient)`.
    pub fn leading(&self) -> Option<(&MultiIndex, &S)> {
        self.terms.iter().next_back()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dimension, other.dimension);
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.dimension);
        for (a, c) in &self.terms {
            out.terms.insert(a.clone(), -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.dimension);
        }
        let mut out = Self::zero(self.dimension);
        for (a, v) in &self.terms {
            out.add_term(a.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dimension, other.dimension);
        let mut out = Self::zero(self.dimension);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.plus(b), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.dimension);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Plain sum `Σ c_α x^α` at a point; exact under exact scalars.
    pub fn eval(&self, point: &[S]) -> S {
        debug_assert_eq!(point.len(), self.dimension);
        let mut acc = S::zero();
        for (a, c) in &self.terms {
            let mut term = c.clone();
            for (axis, &e) in a.0.iter().enumerate() {
                for _ in 0..e {
                    term = term * point[axis].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Repeated partial derivative `∂^|γ| / ∂x^γ` with plain falling-factorial
    /// coefficients (no multinomial normalization).
    pub fn derivative_multi(&self, gamma: &MultiIndex) -> Self {
        debug_assert_eq!(gamma.dimension(), self.dimension);
        let mut out = Self::zero(self.dimension);
        for (beta, c) in &self.terms {
            let Some(target) = beta.minus(gamma) else {
                continue;
            };
            let mut factor: i64 = 1;
            for axis in 0..self.dimension {
                let b = beta.0[axis] as i64;
                let g = gamma.0[axis] as i64;
                for step in 0..g {
                    factor *= b - step;
                }
            }
            out.add_term(target, c.clone() * S::from_int(factor));
        }
        out
    }

    /// Homogeneous directional derivative `∂^j/∂n = Σ_{|α|=j} n_α ∂^j/∂x^α`.
    /// Order zero returns the polynomial unchanged.
    pub fn directional_derivative(&self, n: &Direction<S>) -> Self {
        debug_assert_eq!(n.dimension(), self.dimension);
        if n.order() == 0 {
            return self.scale(&n.coeffs()[0]);
        }
        let mut out = Self::zero(self.dimension);
        for (gamma, w) in n.terms() {
            if w.is_zero() {
                continue;
            }
            out = out.add(&self.derivative_multi(&gamma).scale(w));
        }
        out
    }

    /// Expands `∏ R_a^{d_a}`.
    pub fn expand_factored(factors: &[(MPoly<S>, u32)]) -> Result<Self> {
        let Some((first, _)) = factors.first() else {
            return Err(Error::Invalid("empty factor list".into()));
        };
        let dimension = first.dimension;
        let mut out = Self::one(dimension);
        for (r, d) in factors {
            if r.dimension != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: r.dimension,
                });
            }
            if *d < 1 {
                return Err(Error::Invalid("factor multiplicity must be >= 1".into()));
            }
            out = out.mul(&r.pow(*d));
        }
        Ok(out)
    }

    /// Drops every coefficient with magnitude at most `threshold` (absolute).
    /// No-op on exact scalars with `threshold = 0`.
    pub fn trim(&self, threshold: f64) -> Self {
        let mut out = Self::zero(self.dimension);
        for (a, c) in &self.terms {
            if !c.is_zero_with(threshold) {
                out.terms.insert(a.clone(), c.clone());
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(Scalar::abs_f64).fold(0.0, f64::max)
    }

    /// Exact quotient `self / q`, or `InexactDivision` if `q` does not divide
    /// `self`. Greedy leading-term reduction in the graded monomial order: the
    /// reduction succeeds with zero remainder if and only if the division is
    /// exact. On float scalars, coefficients below `tol` (absolute) count as
    /// zero dust.
    pub fn divide_exact(&self, q: &Self, tol: f64) -> Result<Self> {
        debug_assert_eq!(self.dimension, q.dimension);
        if q.is_zero() {
            return Err(Error::Invalid("division by the zero polynomial".into()));
        }
        let threshold = if S::EXACT { 0.0 } else { tol };
        let (lm_q, lc_q) = {
            let (a, c) = q.leading().expect("nonzero divisor");
            (a.clone(), c.clone())
        };
        let mut rem = self.trim(threshold);
        let mut quot = Self::zero(self.dimension);
        while let Some((lm_r, lc_r)) = rem.leading().map(|(a, c)| (a.clone(), c.clone())) {
            let Some(shift) = lm_r.minus(&lm_q) else {
                return Err(Error::InexactDivision {
                    residual: rem.max_abs_coeff(),
                });
            };
            let c = lc_r / lc_q.clone();
            quot.add_term(shift.clone(), c.clone());
            rem = rem.sub(&Self::monomial(shift, c).mul(q));
            // The leading term cancels exactly by construction; remove any
            // rounding dust so the loop strictly descends.
            rem.terms.remove(&lm_r);
            rem = rem.trim(threshold);
        }
        Ok(quot)
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> MPoly<T> {
        let mut out = MPoly::zero(self.dimension);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), f(c));
        }
        out
    }

    /// Canonical embedding into an extension scalar (e.g. real → complex).
    pub fn embed<F: FromReal<S>>(&self) -> MPoly<F> {
        self.map_scalar(F::from_real)
    }

    /// Parses the canonical text format; see the module-level printer.
    pub fn parse(input: &str, dimension: usize) -> Result<Self> {
        parse_poly(input, dimension)
    }
}

impl<S: Scalar> fmt::Display for MPoly<S> {
    /// Canonical form: terms in ascending basis order, `coeff*x1^a1*x2^a2`
    /// per term, unit coefficients elided on non-constant monomials. The
    /// parser inverts this bit-exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (alpha, c) in &self.terms {
            let lit = c.format_literal();
            let (neg, mag) = match lit.strip_prefix('-') {
                // A leading minus only factors out when the rest is a plain
                // magnitude (no embedded sign, as in complex literals).
                Some(rest) if !rest.contains(['+', '-']) => (true, rest.to_string()),
                _ => (false, lit),
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mono = monomial_string(alpha);
            let needs_parens = mag.contains(['+', '-']);
            match (mono.is_empty(), mag.as_str()) {
                (true, _) if needs_parens => write!(f, "({mag})")?,
                (true, _) => write!(f, "{mag}")?,
                (false, "1") => write!(f, "{mono}")?,
                (false, _) if needs_parens => write!(f, "({mag})*{mono}")?,
                (false, _) => write!(f, "{mag}*{mono}")?,
            }
        }
        Ok(())
    }
}

fn monomial_string(alpha: &MultiIndex) -> String {
    let mut parts = Vec::new();
    for (axis, &e) in alpha.0.iter().enumerate() {
        if e == 1 {
            parts.push(format!("x{}", axis + 1));
        } else if e > 1 {
            parts.push(format!("x{}^{}", axis + 1, e));
        }
    }
    parts.join("*")
}

fn variable_axis(name: &str, dimension: usize) -> Result<usize> {
    let axis = match name {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        "w" => 3,
        _ => {
            let digits = name
                .strip_prefix('x')
                .ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))?;
            let idx: usize = digits
                .parse()
                .map_err(|_| Error::Parse(format!("unknown variable {name:?}")))?;
            if idx == 0 {
                return Err(Error::Parse("variables are numbered from x1".into()));
            }
            idx - 1
        }
    };
    if axis >= dimension {
        return Err(Error::Parse(format!(
            "variable {name:?} exceeds dimension {dimension}"
        )));
    }
    Ok(axis)
}

/// Splits at top-level `+`/`-`, respecting parentheses and exponent signs.
fn split_terms(input: &str) -> Vec<(bool, String)> {
    let mut terms = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    let mut neg = false;
    let mut prev: Option<char> = None;
    for ch in input.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            '+' | '-'
                if depth == 0
                    && !matches!(prev, Some('e') | Some('E'))
                    && !current.trim().is_empty() =>
            {
                terms.push((neg, std::mem::take(&mut current)));
                neg = ch == '-';
            }
            '+' | '-'
                if depth == 0
                    && current.trim().is_empty()
                    && !matches!(prev, Some('e') | Some('E')) =>
            {
                neg ^= ch == '-';
            }
            _ => current.push(ch),
        }
        if !ch.is_whitespace() {
            prev = Some(ch);
        }
    }
    if !current.trim().is_empty() {
        terms.push((neg, current));
    }
    terms
}

fn parse_poly<S: Scalar>(input: &str, dimension: usize) -> Result<MPoly<S>> {
    let input = input.trim();
    if input.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut poly = MPoly::zero(dimension);
    for (neg, term) in split_terms(input) {
        let mut coeff = S::one();
        let mut alpha = MultiIndex::zero(dimension);
        let mut saw_factor = false;
        for factor in term.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(Error::Parse(format!("empty factor in term {term:?}")));
            }
            saw_factor = true;
            let body = factor
                .strip_prefix('(')
                .and_then(|rest| rest.strip_suffix(')'))
                .unwrap_or(factor);
            if body.starts_with(|c: char| c.is_ascii_alphabetic()) {
                let (name, exp) = match body.split_once('^') {
                    Some((n, e)) => {
                        let e: u32 = e
                            .trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad exponent in {factor:?}")))?;
                        (n.trim(), e)
                    }
                    None => (body, 1),
                };
                let axis = variable_axis(name, dimension)?;
                for _ in 0..exp {
                    alpha = alpha.shifted(axis);
                }
            } else {
                coeff = coeff * S::parse_literal(body)?;
            }
        }
        if !saw_factor {
            return Err(Error::Parse(format!("empty term in {input:?}")));
        }
        if neg {
            coeff = -coeff;
        }
        poly.add_term(alpha, coeff);
    }
    Ok(poly)
}

/// Direction data for a homogeneous differential operator of order `j`:
/// a coefficient per multi-index in the block `[j]`, in canonical block order.
/// Order zero is plain evaluation (the single coefficient is the scale).
#[derive(Clone, PartialEq, Debug)]
pub struct Direction<S: Scalar> {
    dimension: usize,
    order: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> Direction<S> {
    pub fn new(dimension: usize, order: usize, coeffs: Vec<S>) -> Result<Self> {
        let expected = enumerate_block(dimension, order).len();
        if coeffs.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().all(Zero::is_zero) {
            return Err(Error::Invalid("direction has no nonzero component".into()));
        }
        Ok(Direction {
            dimension,
            order,
            coeffs,
        })
    }

    /// Plain evaluation, `j = 0`.
    pub fn evaluation(dimension: usize) -> Self {
        Direction {
            dimension,
            order: 0,
            coeffs: vec![S::one()],
        }
    }

    /// The coordinate partial `∂^j/∂x_a^j`.
    pub fn axis(dimension: usize, axis: usize, order: usize) -> Self {
        if order == 0 {
            return Self::evaluation(dimension);
        }
        let block = enumerate_block(dimension, order);
        let mut target = MultiIndex::zero(dimension);
        for _ in 0..order {
            target = target.shifted(axis);
        }
        let coeffs = block
            .iter()
            .map(|a| if *a == target { S::one() } else { S::zero() })
            .collect();
        Direction {
            dimension,
            order,
            coeffs,
        }
    }

    /// Builds from sparse `(multi-index, coefficient)` components of order `j`.
    pub fn from_components(
        dimension: usize,
        order: usize,
        components: &[(MultiIndex, S)],
    ) -> Result<Self> {
        let block = enumerate_block(dimension, order);
        let mut coeffs = vec![S::zero(); block.len()];
        for (alpha, c) in components {
            if alpha.degree() != order {
                return Err(Error::Invalid(format!(
                    "component {alpha} has degree {} in an order-{order} direction",
                    alpha.degree()
                )));
            }
            let pos =
                block
                    .iter()
                    .position(|b| b == alpha)
                    .ok_or_else(|| Error::DimensionMismatch {
                        expected: dimension,
                        got: alpha.dimension(),
                    })?;
            coeffs[pos] = c.clone();
        }
        Self::new(dimension, order, coeffs)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &S)> {
        enumerate_block(self.dimension, self.order)
            .into_iter()
            .zip(self.coeffs.iter())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Direction<T> {
        Direction {
            dimension: self.dimension,
            order: self.order,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn embed<F: FromReal<S>>(&self) -> Direction<F> {
        self.map_scalar(F::from_real)
    }
}
