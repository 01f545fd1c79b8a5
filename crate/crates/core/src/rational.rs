//! Exact rational numbers and their `"p/q"` text form.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};

/// Exact rational used for lengths, crossratio values and distances.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as a rational: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"1.25"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| err("bad numerator"))?;
        let q: i64 = q.trim().parse().map_err(|_| err("bad denominator"))?;
        if q == 0 {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| err("bad integer part"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(err("bad fractional part"));
        }
        let den = 10i64.pow(frac.len() as u32);
        let num: i64 = frac.parse().map_err(|_| err("bad fractional part"))?;
        let magnitude = Rational::from_integer(int_part.abs()) + Rational::new(num, den);
        return Ok(if neg { -magnitude } else { magnitude });
    }
    t.parse::<i64>()
        .map(Rational::from_integer)
        .map_err(|_| err("not a number"))
}

/// Canonical `"p/q"` form; integers are written with denominator 1.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `base^exp` for a nonnegative integer exponent.
pub fn pow(base: Rational, exp: u32) -> Rational {
    let mut acc = Rational::from_integer(1);
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Smallest integer `>= r`.
pub fn ceil(r: &Rational) -> i64 {
    let (q, m) = r.numer().div_mod_floor(r.denom());
    if m.is_zero() {
        q
    } else {
        q + 1
    }
}

pub fn abs_diff(a: Rational, b: Rational) -> Rational {
    (a - b).abs()
}

/// Wrapper giving a rational a `"p/q"` serde representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatStr(pub Rational);

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl serde::Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map(RatStr).map_err(de::Error::custom)
    }
}

/// `serialize_with` helper writing `"p/q"`.
pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_rational("3/2").unwrap(), Rational::new(3, 2));
        assert_eq!(parse_rational("6/4").unwrap(), Rational::new(3, 2));
        assert_eq!(parse_rational("7").unwrap(), Rational::from_integer(7));
        assert_eq!(parse_rational("1.25").unwrap(), Rational::new(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), Rational::new(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_with_denominator() {
        assert_eq!(format_rational(&Rational::from_integer(2)), "2/1");
        assert_eq!(format_rational(&Rational::new(-3, 6)), "-1/2");
    }

    #[test]
    fn ceil_rounds_up() {
        assert_eq!(ceil(&Rational::new(3, 2)), 2);
        assert_eq!(ceil(&Rational::new(-3, 2)), -1);
        assert_eq!(ceil(&Rational::from_integer(4)), 4);
    }
}
