//! Scalar fields the form algebra is generic over.
//!
//! Every algebraic routine in the crate is written once against [`Scalar`]
//! and instantiated either with machine floats or with exact big rationals.
//! Coefficients of forms are always complex: [`Cx<S>`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Complex number over a [`Scalar`].
pub type Cx<S> = Complex<S>;

/// Exact rational scalar.
pub type Rational = BigRational;

/// A real field usable as the coefficient base of forms.
pub trait Scalar:
    crate::linalg::Field + Debug + Display + PartialOrd + Num + Signed + 'static
{
    /// Absolute threshold below which a value counts as zero.
    fn zero_tolerance() -> f64;

    fn from_int(v: i64) -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn to_f64(&self) -> f64;

    /// Nearest representable value. Exact scalars convert the binary float exactly.
    fn from_f64(v: f64) -> Self;

    /// Image of an exact rational (rounded for float fields).
    fn from_rational(q: &BigRational) -> Self;

    /// Square root when it exists in the field.
    fn sqrt_opt(&self) -> Option<Self>;

    fn is_negligible(&self) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.to_f64().abs() <= Self::zero_tolerance()
        }
    }

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;
}

impl Scalar for f64 {
    fn zero_tolerance() -> f64 {
        1e-12
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn from_rational(q: &BigRational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn sqrt_opt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }

    fn to_json(&self) -> Value {
        json!(*self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        v.as_f64().ok_or_else(|| Error::Format(format!("expected a float, got {v}")))
    }
}

impl Scalar for f32 {
    fn zero_tolerance() -> f64 {
        1e-5
    }

    fn from_int(v: i64) -> Self {
        v as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn from_rational(q: &BigRational) -> Self {
        ToPrimitive::to_f32(q).unwrap_or(f32::NAN)
    }

    fn sqrt_opt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }

    fn to_json(&self) -> Value {
        json!(*self as f64)
    }

    fn from_json(v: &Value) -> Result<Self> {
        v.as_f64()
            .map(|x| x as f32)
            .ok_or_else(|| Error::Format(format!("expected a float, got {v}")))
    }
}

impl Scalar for BigRational {
    fn zero_tolerance() -> f64 {
        0.0
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).unwrap_or_else(Zero::zero)
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn sqrt_opt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        (&n * &n == *self.numer() && &d * &d == *self.denom()).then(|| BigRational::new(n, d))
    }

    /// Serialized as a `[numerator, denominator]` pair of decimal strings.
    fn to_json(&self) -> Value {
        json!([self.numer().to_string(), self.denom().to_string()])
    }

    fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Format(format!("expected [numerator, denominator], got {v}"));
        let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
        let parse = |x: &Value| -> Result<BigInt> {
            match x {
                Value::String(s) => s.parse().map_err(|_| bad()),
                Value::Number(n) => n.as_i64().map(BigInt::from).ok_or_else(bad),
                _ => Err(bad()),
            }
        };
        let den = parse(&pair[1])?;
        if den.is_zero() {
            return Err(Error::Format("zero denominator".into()));
        }
        Ok(BigRational::new(parse(&pair[0])?, den))
    }
}

/// `i` in the complexification.
pub fn imag_unit<S: Scalar>() -> Cx<S> {
    Complex::new(S::zero(), S::one())
}

pub fn real<S: Scalar>(v: S) -> Cx<S> {
    Complex::new(v, S::zero())
}

pub fn cx_int<S: Scalar>(v: i64) -> Cx<S> {
    real(S::from_int(v))
}

pub fn cx_negligible<S: Scalar>(z: &Cx<S>) -> bool {
    z.re.is_negligible() && z.im.is_negligible()
}

pub fn cx_to_f64<S: Scalar>(z: &Cx<S>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn cx_from_f64<S: Scalar>(z: Complex<f64>) -> Cx<S> {
    Complex::new(S::from_f64(z.re), S::from_f64(z.im))
}

/// `i^k` for any integer `k`.
pub fn i_pow<S: Scalar>(k: i64) -> Cx<S> {
    match k.rem_euclid(4) {
        0 => Complex::one(),
        1 => imag_unit(),
        2 => -Complex::<S>::one(),
        _ => -imag_unit::<S>(),
    }
}

/// Magnitude used for pivoting and residual reporting.
pub fn cx_abs_f64<S: Scalar>(z: &Cx<S>) -> f64 {
    cx_to_f64(z).norm()
}

/// `n!` as a scalar.
pub fn factorial<S: Scalar>(n: usize) -> S {
    (1..=n as i64).fold(S::one(), |acc, k| acc * S::from_int(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_sqrt_only_for_squares() {
        assert_eq!(Rational::ratio(9, 4).sqrt_opt(), Some(Rational::ratio(3, 2)));
        assert_eq!(Rational::ratio(2, 1).sqrt_opt(), None);
        assert_eq!(Rational::ratio(-1, 1).sqrt_opt(), None);
    }

    #[test]
    fn rational_json_roundtrip() {
        let q = Rational::ratio(-7, 12);
        assert_eq!(Rational::from_json(&q.to_json()).unwrap(), q);
        assert!(Rational::from_json(&json!(["1", "0"])).is_err());
    }

    #[test]
    fn powers_of_i() {
        let i = imag_unit::<Rational>();
        assert_eq!(i_pow::<Rational>(5), i);
        assert_eq!(i_pow::<Rational>(-1), -i);
        assert_eq!(i_pow::<Rational>(2) * i_pow::<Rational>(2), Complex::one());
    }
}
