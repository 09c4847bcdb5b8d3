//! Exact rate and time quantities.
//!
//! Every rate, capacity and timestamp in the crate is an arbitrary-precision
//! rational. Demands and stamped rates may additionally be infinite, which is
//! represented symbolically by [`Rate::Infinite`] rather than by a sentinel.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number used for rates, capacities and times.
pub type Rational = BigRational;

/// Simulation time.
pub type Time = Rational;

/// Build a rational from an integer numerator and denominator.
///
/// Panics if `den` is zero.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Build an integral rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid number `{input}`: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

/// Parse an exact rational from an integer (`12`), a decimal (`-2.375`) or a
/// fraction (`7/3`).
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(|| err("bad numerator"))?;
        let d = parse_decimal(d.trim()).ok_or_else(|| err("bad denominator"))?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(n / d);
    }
    parse_decimal(t).ok_or_else(|| err("expected integer, decimal or a/b fraction"))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Render a rational exactly: `5`, `-3/4`, `100/3`.
pub fn fmt_exact(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Render a rational as a decimal with 6 significant digits.
pub fn fmt_decimal(r: &Rational) -> String {
    let v = to_f64(r);
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A rate that may be infinite: flow demands and stamped rates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rate {
    Finite(Rational),
    Infinite,
}

impl Rate {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Rate::Finite(r) => Some(r),
            Rate::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Rate::Infinite)
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Rate::Finite(r) if r.is_negative())
    }

    /// Minimum of a (possibly infinite) rate and a finite one.
    pub fn min_finite(&self, other: &Rational) -> Rational {
        match self {
            Rate::Finite(r) if r < other => r.clone(),
            _ => other.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rate::Finite(r) => to_f64(r),
            Rate::Infinite => f64::INFINITY,
        }
    }

    pub fn decimal(&self) -> String {
        match self {
            Rate::Finite(r) => fmt_decimal(r),
            Rate::Infinite => "inf".to_string(),
        }
    }
}

impl From<Rational> for Rate {
    fn from(r: Rational) -> Self {
        Rate::Finite(r)
    }
}

impl PartialEq<Rational> for Rate {
    fn eq(&self, other: &Rational) -> bool {
        matches!(self, Rate::Finite(r) if r == other)
    }
}

impl PartialOrd<Rational> for Rate {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        Some(match self {
            Rate::Finite(r) => r.cmp(other),
            Rate::Infinite => Ordering::Greater,
        })
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rate::Finite(a), Rate::Finite(b)) => a.cmp(b),
            (Rate::Finite(_), Rate::Infinite) => Ordering::Less,
            (Rate::Infinite, Rate::Finite(_)) => Ordering::Greater,
            (Rate::Infinite, Rate::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Finite(r) => f.write_str(&fmt_exact(r)),
            Rate::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Rate {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" => Ok(Rate::Infinite),
            _ => parse_rational(s).map(Rate::Finite),
        }
    }
}
