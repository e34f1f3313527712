//! Pluggable scalar fields.
//!
//! Two real scalars ship: exact rationals ([`Rat`], arbitrary precision) and
//! `f64`. Complex variants come for free as `num_complex::Complex` over either
//! real scalar; complex nodes on real varieties use them. Exact scalars make
//! every "is this zero" question unambiguous; the float path answers it with a
//! caller-supplied tolerance.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Rat = BigRational;

pub use num_complex::Complex as Cx;

/// Field operations plus the bookkeeping the pipeline needs: construction
/// from small rationals, conjugation, magnitude estimates for float
/// diagnostics, and a literal format that round-trips exactly.
pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Whether arithmetic is exact (rational) rather than rounded (float).
    const EXACT: bool;

    fn from_int(n: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Complex conjugate; identity on real scalars.
    fn conj(&self) -> Self;

    /// Magnitude as `f64` (modulus for complex scalars). Approximate; used
    /// only for float decisions and reporting, never on the exact path.
    fn abs_f64(&self) -> f64;

    /// Real part as `f64`, approximate.
    fn re_f64(&self) -> f64;

    /// Imaginary part as `f64`, approximate; zero on real scalars.
    fn im_f64(&self) -> f64;

    /// Canonical literal; [`Scalar::parse_literal`] inverts it bit-exactly.
    fn format_literal(&self) -> String;

    fn parse_literal(s: &str) -> Result<Self>;

    /// Zero test: structural for exact scalars, `|x| <= tol` for floats.
    fn is_zero_with(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.abs_f64() <= tol
        }
    }
}

/// Real scalars, i.e. those that can sit under a `Complex`.
pub trait RealScalar: Scalar + Num + PartialOrd {
    fn to_f64_approx(&self) -> f64;

    /// Exact sign test (formatting needs it even when `to_f64` underflows).
    fn is_negative(&self) -> bool;
}

/// Canonical embedding of a real scalar field into a (possibly complex)
/// extension. Identity when the two coincide.
pub trait FromReal<R: Scalar>: Scalar {
    fn from_real(r: &R) -> Self;
}

/// Projection back onto the real scalar: real and imaginary parts.
pub trait ComplexParts<R: Scalar>: Scalar {
    fn real_part(&self) -> R;
    fn imag_part(&self) -> R;
}

impl<S: Scalar> FromReal<S> for S {
    fn from_real(r: &S) -> S {
        r.clone()
    }
}

impl<S: RealScalar> FromReal<S> for Complex<S> {
    fn from_real(r: &S) -> Self {
        Complex::new(r.clone(), S::zero())
    }
}

impl<S: Scalar> ComplexParts<S> for S {
    fn real_part(&self) -> S {
        self.clone()
    }
    fn imag_part(&self) -> S {
        S::zero()
    }
}

impl<S: RealScalar> ComplexParts<S> for Complex<S> {
    fn real_part(&self) -> S {
        self.re.clone()
    }
    fn imag_part(&self) -> S {
        self.im.clone()
    }
}

// ---------------------------------------------------------------------------
// Exact rationals
// ---------------------------------------------------------------------------

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn conj(&self) -> Self {
        self.clone()
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }

    fn re_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }

    fn im_f64(&self) -> f64 {
        0.0
    }

    fn format_literal(&self) -> String {
        self.to_string()
    }

    fn parse_literal(s: &str) -> Result<Self> {
        parse_rational(s)
    }
}

impl RealScalar for BigRational {
    fn to_f64_approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Parses `p`, `p/q`, or a finite decimal like `-1.25` into an exact rational.
fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational literal".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = format!("{}{}", int_part.trim_start_matches(['+', '-']), frac_part);
        let mantissa: BigInt = digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad decimal literal {s:?}")))?;
        let sign = if s.starts_with('-') { -1 } else { 1 };
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Ok(BigRational::new(BigInt::from(sign) * mantissa, den));
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer literal {s:?}")))?;
    Ok(BigRational::from_integer(n))
}

// ---------------------------------------------------------------------------
// f64
// ---------------------------------------------------------------------------

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn conj(&self) -> Self {
        *self
    }

    fn abs_f64(&self) -> f64 {
        self.abs()
    }

    fn re_f64(&self) -> f64 {
        *self
    }

    fn im_f64(&self) -> f64 {
        0.0
    }

    fn format_literal(&self) -> String {
        // Display for f64 prints the shortest representation that parses back
        // to the same bits.
        format!("{self}")
    }

    fn parse_literal(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
            let d: f64 = den
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
            return Ok(n / d);
        }
        s.parse()
            .map_err(|_| Error::Parse(format!("bad float literal {s:?}")))
    }
}

impl RealScalar for f64 {
    fn to_f64_approx(&self) -> f64 {
        *self
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}

// ---------------------------------------------------------------------------
// Complex over a real scalar
// ---------------------------------------------------------------------------

impl<S: RealScalar> Scalar for Complex<S> {
    const EXACT: bool = S::EXACT;

    fn from_int(n: i64) -> Self {
        Complex::new(S::from_int(n), S::zero())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(S::from_ratio(num, den), S::zero())
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn abs_f64(&self) -> f64 {
        let re = self.re.to_f64_approx();
        let im = self.im.to_f64_approx();
        re.hypot(im)
    }

    fn re_f64(&self) -> f64 {
        self.re.to_f64_approx()
    }

    fn im_f64(&self) -> f64 {
        self.im.to_f64_approx()
    }

    fn format_literal(&self) -> String {
        if self.im.is_zero() {
            return self.re.format_literal();
        }
        if self.re.is_zero() {
            return format!("{}i", self.im.format_literal());
        }
        let neg = self.im.is_negative();
        let im_abs = if neg {
            S::zero() - self.im.clone()
        } else {
            self.im.clone()
        };
        format!(
            "{}{}{}i",
            self.re.format_literal(),
            if neg { '-' } else { '+' },
            im_abs.format_literal()
        )
    }

    fn parse_literal(s: &str) -> Result<Self> {
        parse_complex(s)
    }
}

/// Splits `a`, `bi`, `a+bi`, `a-bi` into parts, honoring exponent signs in
/// float literals (`1e-3` is one token, not a difference).
fn parse_complex<S: RealScalar>(s: &str) -> Result<Complex<S>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    if !s.ends_with('i') {
        return Ok(Complex::new(S::parse_literal(s)?, S::zero()));
    }
    let body = &s[..s.len() - 1];
    // Look for the split point between real and imaginary parts.
    let bytes = body.as_bytes();
    let mut split = None;
    for idx in (1..bytes.len()).rev() {
        let c = bytes[idx] as char;
        if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
            split = Some(idx);
            break;
        }
    }
    match split {
        Some(idx) => {
            let re = S::parse_literal(&body[..idx])?;
            let im_str = &body[idx..];
            let im = if im_str == "+" || im_str == "-" {
                let unit = S::one();
                if im_str == "-" {
                    S::zero() - unit
                } else {
                    unit
                }
            } else {
                S::parse_literal(im_str)?
            };
            Ok(Complex::new(re, im))
        }
        None => {
            let im = if body.is_empty() {
                S::one()
            } else if body == "-" {
                S::zero() - S::one()
            } else {
                S::parse_literal(body)?
            };
            Ok(Complex::new(S::zero(), im))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
    }

    #[test]
    fn rational_literals_round_trip() {
        for v in [rat(0, 1), rat(3, 4), rat(-7, 2), rat(5, 1), rat(-22, 7)] {
            let s = v.format_literal();
            assert_eq!(Rat::parse_literal(&s).unwrap(), v, "literal {s}");
        }
        assert_eq!(Rat::parse_literal("1.25").unwrap(), rat(5, 4));
        assert_eq!(Rat::parse_literal("-0.5").unwrap(), rat(-1, 2));
    }

    #[test]
    fn float_literals_round_trip() {
        for v in [0.0f64, 1.5, -2.25, 1.0 / 3.0, 1e-12, -3.7e5] {
            let s = v.format_literal();
            assert_eq!(f64::parse_literal(&s).unwrap(), v, "literal {s}");
        }
        assert_eq!(f64::parse_literal("1/4").unwrap(), 0.25);
    }

    #[test]
    fn complex_literals_round_trip() {
        let cases: Vec<Complex<Rat>> = vec![
            Complex::new(rat(1, 2), rat(3, 4)),
            Complex::new(rat(0, 1), rat(-5, 4)),
            Complex::new(rat(-2, 1), rat(0, 1)),
            Complex::new(rat(1, 3), rat(-1, 3)),
        ];
        for v in cases {
            let s = v.format_literal();
            assert_eq!(Complex::<Rat>::parse_literal(&s).unwrap(), v, "literal {s}");
        }
        let f = Complex::new(1.5e-3, -2.0);
        let s = f.format_literal();
        assert_eq!(Complex::<f64>::parse_literal(&s).unwrap(), f);
        assert_eq!(
            Complex::<f64>::parse_literal("i").unwrap(),
            Complex::new(0.0, 1.0)
        );
    }

    #[test]
    fn embedding_and_parts() {
        let x = rat(2, 3);
        let z: Complex<Rat> = Complex::from_real(&x);
        assert_eq!(ComplexParts::<Rat>::real_part(&z), x);
        assert!(ComplexParts::<Rat>::imag_part(&z).is_zero());
        let same: Rat = FromReal::<Rat>::from_real(&x);
        assert_eq!(same, x);
    }
}
