//! Numeric backends.
//!
//! Every metric, map and linear program is generic over [`Scalar`]. Two
//! implementations exist: `f64`, which compares with a relative tolerance,
//! and [`Rational`] (arbitrary precision), which compares exactly. Dyadic
//! grids under the 1- and ∞-norms live entirely in the rational backend.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic and comparisons are exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossy for rationals with huge terms; exact backends never need it
    /// for control flow.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self -= a * b`, the simplex inner loop.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);

    /// `self <= other` up to a relative tolerance (ignored when exact).
    fn le_tol(&self, other: &Self, rel: f64) -> bool;

    /// Equality up to a relative tolerance (exact equality when exact).
    fn eq_tol(&self, other: &Self, rel: f64) -> bool {
        self.le_tol(other, rel) && other.le_tol(self, rel)
    }

    /// Strictly positive beyond the tolerance.
    fn pos_tol(&self, abs: f64) -> bool;

    /// Strictly negative beyond the tolerance.
    fn neg_tol(&self, abs: f64) -> bool {
        (-self.clone()).pos_tol(abs)
    }

    fn is_zero_tol(&self, abs: f64) -> bool {
        !self.pos_tol(abs) && !self.neg_tol(abs)
    }

    /// Parses `"3"`, `"-0.25"`, `"1/3"` or `"1e-3"`.
    fn parse_str(s: &str) -> Option<Self>;

    /// Square root, `None` when it is not representable (irrational in the
    /// exact backend, negative input anywhere).
    fn sqrt_checked(&self) -> Option<Self>;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn le_tol(&self, other: &Self, rel: f64) -> bool {
        let scale = 1.0_f64.max(self.abs()).max(other.abs());
        *self <= *other + rel * scale
    }

    fn pos_tol(&self, abs: f64) -> bool {
        *self > abs
    }

    fn parse_str(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
            None => s.parse().ok(),
        }
    }

    fn sqrt_checked(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self -= a * b;
    }

    fn le_tol(&self, other: &Self, _rel: f64) -> bool {
        self <= other
    }

    fn pos_tol(&self, _abs: f64) -> bool {
        self.is_positive()
    }

    fn parse_str(s: &str) -> Option<Self> {
        parse_rational(s.trim())
    }

    fn sqrt_checked(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        (&n * &n == *self.numer() && &d * &d == *self.denom()).then(|| Rational::new(n, d))
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n.trim())?;
        let d = parse_rational(d.trim())?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits }).ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(if negative { -value } else { value })
}

/// Exact rational value of a float, for seeding rational computations from
/// float inputs whose binary value is intended (dyadic data).
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// 2^-n as an exact scalar.
pub fn dyadic<S: Scalar>(n: u32) -> S {
    let mut v = S::one();
    let half = S::from_ratio(1, 2);
    for _ in 0..n {
        v = v * half.clone();
    }
    v
}

/// Fixed-precision rendering used by reports; exact values print as `p/q`.
pub fn fmt_scalar<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        format!("{x}")
    } else {
        format!("{:.12}", x.to_f64_lossy())
    }
}

/// Serde adapter printing through [`fmt_scalar`].
pub fn ser_scalar<S: Scalar, Se: serde::Serializer>(v: &S, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
    s.serialize_str(&fmt_scalar(v))
}

/// As [`ser_scalar`], with `None` as `null`.
pub fn ser_opt_scalar<S: Scalar, Se: serde::Serializer>(v: &Option<S>, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
    match v {
        Some(v) => s.serialize_str(&fmt_scalar(v)),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction() {
        assert_eq!(Rational::parse_str("0.25"), Some(Rational::from_ratio(1, 4)));
        assert_eq!(Rational::parse_str("-1/3"), Some(Rational::from_ratio(-1, 3)));
        assert_eq!(Rational::parse_str("1e-2"), Some(Rational::from_ratio(1, 100)));
        assert_eq!(Rational::parse_str("3"), Some(Rational::from_ratio(3, 1)));
        assert_eq!(Rational::parse_str("1/0"), None);
        assert_eq!(Rational::parse_str("abc"), None);
        assert_eq!(f64::parse_str("1/4"), Some(0.25));
    }

    #[test]
    fn float_tolerance_is_relative() {
        assert!(1.0_f64.eq_tol(&(1.0 + 1e-13), 1e-12));
        assert!(!1.0_f64.eq_tol(&(1.0 + 1e-9), 1e-12));
        assert!(1e6_f64.eq_tol(&(1e6 + 1e-7), 1e-12));
    }

    #[test]
    fn dyadic_powers() {
        assert_eq!(dyadic::<Rational>(3), Rational::from_ratio(1, 8));
        assert_eq!(dyadic::<f64>(0), 1.0);
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(Rational::from_ratio(9, 16).sqrt_checked(), Some(Rational::from_ratio(3, 4)));
        assert_eq!(Rational::from_ratio(2, 1).sqrt_checked(), None);
        assert_eq!(Rational::from_ratio(-1, 4).sqrt_checked(), None);
    }
}
