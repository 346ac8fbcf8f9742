//! Exact rational arithmetic helpers.
//!
//! Proportions and weights are `BigRational` everywhere a correctness
//! decision depends on them. Floats appear only in the sample-size formulas.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LlpError, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_count(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

pub fn to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale both sides down until they fit.
            let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Parses `"a/b"`, an integer, or a finite decimal such as `"0.125"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || LlpError::InvalidParams(format!("cannot parse rational from {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let digits = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact rational equal to the shortest decimal rendering of `x`, so
/// `0.1` becomes `1/10` rather than the binary double nearest to it.
pub fn from_f64_decimal(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(LlpError::InvalidParams(format!("non-finite number {x}")));
    }
    parse_rational(&format!("{x}"))
}

/// Serde adapter writing a rational as the string `"num/den"` (or `"num"`).
pub mod serde_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = RationalParam::deserialize(d)?;
        Ok(v.0)
    }
}

/// A rational read from JSON as either a number or a string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalParam(pub Rational);

impl Serialize for RationalParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Rational::from_integer(BigInt::from(i))),
            Raw::Float(f) => from_f64_decimal(f),
            Raw::Text(t) => parse_rational(&t),
        };
        parsed.map(RationalParam).map_err(serde::de::Error::custom)
    }
}

/// An integer that serializes as a JSON number when it fits in 64 bits and as
/// a decimal string otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if let Some(v) = self.0.to_i64() {
            s.serialize_i64(v)
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Signed(i64),
            Unsigned(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Signed(v) => Ok(JsonInt(BigInt::from(v))),
            Raw::Unsigned(v) => Ok(JsonInt(BigInt::from(v))),
            Raw::Text(t) => t.trim().parse().map(JsonInt).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/7").unwrap(), ratio(3, 7));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational("5e-2").unwrap(), ratio(1, 20));
        assert_eq!(parse_rational("12").unwrap(), ratio(12, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn decimal_float_conversion_is_exact_on_short_decimals() {
        assert_eq!(from_f64_decimal(0.1).unwrap(), ratio(1, 10));
        assert_eq!(from_f64_decimal(0.05).unwrap(), ratio(1, 20));
        assert!(from_f64_decimal(f64::NAN).is_err());
    }

    #[test]
    fn to_f64_handles_huge_terms() {
        let big = Rational::new(BigInt::from(1) << 2000u32, (BigInt::from(1) << 2001u32) + 1);
        assert!((to_f64(&big) - 0.5).abs() < 1e-12);
    }
}
