//! Exact rational arithmetic helpers shared by every evaluator.
//!
//! Values are [`Rational`] (arbitrary precision). Norms whose square is
//! rational keep the square exactly and expose the root as a dyadic
//! enclosure with a certified radius.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Bits of precision used when a square root is enclosed.
pub const SQRT_BITS: u64 = 64;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^{-k}` as an exact rational.
pub fn pow2_neg(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational p/q"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Exact conversion of a finite `f64` (every finite double is dyadic).
pub fn rat_from_f64(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back through a shift for values too large for the fast path
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values
        .into_iter()
        .map(|v| v.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Dyadic form `mantissa * 2^exponent` when the denominator is a power of two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dyadic {
    pub mantissa: String,
    pub exponent: i64,
}

impl Dyadic {
    pub fn of(r: &Rational) -> Option<Dyadic> {
        let d = r.denom();
        let bits = d.bits();
        if bits == 0 || (d.clone() & (d.clone() - BigInt::one())) != BigInt::zero() {
            return None;
        }
        Some(Dyadic {
            mantissa: r.numer().to_string(),
            exponent: -((bits - 1) as i64),
        })
    }
}

/// Lower enclosure of `sqrt(s)` on the grid `1/(q 2^bits)` where `q` is the
/// denominator of `s`; the true root lies in `[value, value + radius)`.
pub fn sqrt_enclosure(s: &Rational, bits: u64) -> (Rational, Rational) {
    assert!(!s.is_negative(), "square root of a negative rational");
    let p = s.numer().to_biguint().unwrap_or_default();
    let q = s.denom().to_biguint().unwrap_or_else(BigUint::one);
    let scaled: BigUint = (&p * &q) << (2 * bits as usize);
    let root = scaled.sqrt();
    let denom = BigInt::from(q) << bits as usize;
    (
        Rational::new(BigInt::from(root), denom.clone()),
        Rational::new(BigInt::one(), denom),
    )
}

/// A norm evaluation: `value` within `error_radius` of the true norm.
/// When the squared norm is rational it is carried exactly in `square`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormValue {
    pub value: Rational,
    pub error_radius: Rational,
    pub square: Option<Rational>,
}

impl NormValue {
    pub fn exact(value: Rational) -> NormValue {
        NormValue {
            square: Some(&value * &value),
            value,
            error_radius: Rational::zero(),
        }
    }

    pub fn from_square(square: Rational) -> NormValue {
        if square.is_zero() {
            return NormValue::exact(Rational::zero());
        }
        let (value, radius) = sqrt_enclosure(&square, SQRT_BITS);
        // exact when the square is a perfect square
        let exact = &value * &value == square;
        NormValue {
            value,
            error_radius: if exact { Rational::zero() } else { radius },
            square: Some(square),
        }
    }

    pub fn approx(value: f64, radius: f64) -> NormValue {
        NormValue {
            value: rat_from_f64(value),
            error_radius: rat_from_f64(radius.max(0.0)),
            square: None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    pub fn radius_f64(&self) -> f64 {
        to_f64(&self.error_radius)
    }

    pub fn is_exact(&self) -> bool {
        self.error_radius.is_zero()
    }

    pub fn lower(&self) -> Rational {
        &self.value - &self.error_radius
    }

    pub fn upper(&self) -> Rational {
        &self.value + &self.error_radius
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}", self.as_f64())?;
        if !self.is_exact() {
            write!(f, " ± {:.3e}", self.radius_f64())?;
        }
        Ok(())
    }
}

impl Serialize for NormValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        NormValueDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NormValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = NormValueDoc::deserialize(deserializer)?;
        let parse = |s: &str| parse_rational(s).map_err(serde::de::Error::custom);
        Ok(NormValue {
            value: parse(&doc.value)?,
            error_radius: parse(&doc.error_radius)?,
            square: doc.square.as_deref().map(parse).transpose()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct NormValueDoc {
    value: String,
    error_radius: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    square: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dyadic: Option<Dyadic>,
    approx: f64,
}

impl From<&NormValue> for NormValueDoc {
    fn from(v: &NormValue) -> Self {
        NormValueDoc {
            value: format_rational(&v.value),
            error_radius: format_rational(&v.error_radius),
            square: v.square.as_ref().map(format_rational),
            dyadic: Dyadic::of(&v.value),
            approx: v.as_f64(),
        }
    }
}

/// Serde adapter writing a [`Rational`] as a `"p/q"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod serde_opt_rational {
    use super::*;

    pub fn serialize<S: Serializer>(
        r: &Option<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Evaluates `sum_{m>=1} w^m max_i (a_i + c^m b_i)` exactly.
///
/// For large `m` the maximising line is the one with the largest `a`
/// (ties broken by `b`). Every competitor `i` with `b_i > b*` overtakes it
/// only while `c^m > (a* - a_i) / (b_i - b*)`, so the maximiser is constant
/// from the first `m` below all crossover points on; the remainder is two
/// geometric series. An empty family contributes 0. Requires `0 < w, c < 1`.
pub fn geometric_max_sum<T>(w: &T, c: &T, lines: &[(T, T)]) -> T
where
    T: Num + Clone + PartialOrd,
{
    geometric_max_sum_capped(w, c, lines, usize::MAX)
}

/// As [`geometric_max_sum`], but never expands more than `cap` leading
/// terms individually. Only floating-point callers need the cap: with
/// rationals the crossover index is always finite and small.
pub fn geometric_max_sum_capped<T>(w: &T, c: &T, lines: &[(T, T)], cap: usize) -> T
where
    T: Num + Clone + PartialOrd,
{
    if lines.is_empty() {
        return T::zero();
    }
    let mut best = 0;
    for (i, (a, b)) in lines.iter().enumerate() {
        let (ba, bb) = &lines[best];
        if a > ba || (a == ba && b > bb) {
            best = i;
        }
    }
    let (a_star, b_star) = lines[best].clone();
    // smallest crossover threshold in the variable x = c^m
    let mut threshold: Option<T> = None;
    for (a, b) in lines {
        if *b > b_star {
            let x = (a_star.clone() - a.clone()) / (b.clone() - b_star.clone());
            threshold = Some(match threshold {
                Some(t) if t <= x => t,
                _ => x,
            });
        }
    }
    let mut total = T::zero();
    let mut wm = w.clone();
    let mut cm = c.clone();
    let mut m = 1usize;
    if let Some(x) = threshold {
        while cm > x && m <= cap {
            let term = lines
                .iter()
                .map(|(a, b)| a.clone() + cm.clone() * b.clone())
                .fold(None::<T>, |acc, v| match acc {
                    Some(acc) if acc >= v => Some(acc),
                    _ => Some(v),
                })
                .unwrap_or_else(T::zero);
            total = total + wm.clone() * term;
            wm = wm * w.clone();
            cm = cm * c.clone();
            m += 1;
        }
    }
    // tail from m on: a* w^m/(1-w) + b* (wc)^m/(1-wc)
    let one = T::one();
    let wc = w.clone() * c.clone();
    let tail_a = a_star * wm.clone() / (one.clone() - w.clone());
    let tail_b = b_star * wm * cm / (one - wc);
    total + tail_a + tail_b
}
