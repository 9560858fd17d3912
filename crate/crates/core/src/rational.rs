//! Helpers around [`BigRational`]: canonical `"p/q"` strings and small conversions.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

/// Parses `"p/q"` or `"p"` (no decimal point, no whitespace).
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() || text.contains('.') || text.contains(' ') {
        return None;
    }
    let value = BigRational::from_str(text).ok()?;
    Some(value)
}

/// Canonical text form: reduced, sign on the numerator, `"p"` when the denominator is one.
pub fn format_rational(value: &BigRational) -> String {
    value.to_string()
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact `base^exp` for a non-negative integer exponent.
pub fn pow(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Returns `Some(n)` when the rational is a non-negative integer that fits in `u32`.
pub fn as_small_natural(value: &BigRational) -> Option<u32> {
    if value.is_integer() && !value.is_negative() {
        value.to_integer().to_u32()
    } else {
        None
    }
}

/// Exact conversion of a finite `f64` into a rational.
pub fn from_f64(value: f64) -> Option<BigRational> {
    BigRational::from_float(value)
}

pub fn zero() -> BigRational {
    BigRational::zero()
}

/// Serde adapter storing a rational as its canonical string.
pub mod serde_str {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).ok_or_else(|| {
            de::Error::custom(format!("invalid rational {text:?}, expected \"p/q\""))
        })
    }
}

/// Same as [`serde_str`] for sequences.
pub mod serde_str_vec {
    use super::*;
    use serde::{de, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rational(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| {
                parse_rational(t).ok_or_else(|| {
                    de::Error::custom(format!("invalid rational {t:?}, expected \"p/q\""))
                })
            })
            .collect()
    }
}
