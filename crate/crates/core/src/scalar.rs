//! Number types shared by the exact and floating-point code paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for every static model quantity.
pub type Rational = num_rational::BigRational;

/// Absolute tolerance used when the simplex and the greedy recursion run on `f64`.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Arithmetic needed by the dense simplex and the greedy minimizer.
///
/// Sign tests go through this trait so that the rational instance is exact
/// and the `f64` instance applies [`FLOAT_TOLERANCE`].
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(value: &Rational) -> Self;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }
    /// Clamp values that are zero within tolerance (or slightly negative) to 0.
    fn clamp_nonnegative(self) -> Self {
        if self.is_positive() {
            self
        } else {
            Self::zero()
        }
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(value: &Rational) -> Self {
        to_f64(value)
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_TOLERANCE
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_TOLERANCE
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Exact conversion of a finite float.
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

/// Parses `"3"`, `"-2/7"`, `"0.125"` or `"1e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    if let Some((n, d)) = s.split_once('/') {
        let numer: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let denom: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if denom.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(numer, denom));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| format!("bad exponent in {s:?}"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("no digits in {s:?}"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("not a number: {s:?}"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().unwrap_or_else(|_| BigInt::zero());
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Renders a rational as `p` or `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}
