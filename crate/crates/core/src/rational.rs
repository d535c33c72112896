//! Exact rational helpers shared by every module.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number used throughout.
pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {0:?} as a rational (expected \"p/q\", an integer or a decimal)")]
pub struct ParseRationalError(pub String);

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.3"` exactly.
pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() {
            return Err(err());
        }
        let digits = format!("{int_digits}{frac}");
        let mut num: BigInt = digits.parse().map_err(|_| err())?;
        if neg {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(Q::new(num, den));
    }
    let p: BigInt = t.parse().map_err(|_| err())?;
    Ok(Q::from_integer(p))
}

/// Formats as `"p/q"`, or `"p"` for integers.
pub fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

/// 2^k for any integer k.
pub fn pow2(k: i64) -> Q {
    let big = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        Q::from_integer(big)
    } else {
        Q::new(BigInt::one(), big)
    }
}

/// 4^(-k) for k ≥ 0.
pub fn pow4_neg(k: u64) -> Q {
    Q::new(BigInt::one(), BigInt::one() << (2 * k))
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // to_f64 only fails on overflow; fall back through logs
        let s = if q.is_negative() { -1.0 } else { 1.0 };
        s * ln_q(&q.abs()).exp()
    })
}

/// Exact conversion of a finite double.
pub fn from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

/// Natural log of a positive big integer, accurate for huge values.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_q(q: &Q) -> f64 {
    let n = q.numer().magnitude();
    let d = q.denom().magnitude();
    ln_biguint(n) - ln_biguint(d)
}

/// log2 of a positive rational, floor-exact for powers of two.
pub fn log2_floor(q: &Q) -> i64 {
    assert!(q.is_positive());
    let n = q.numer().magnitude();
    let d = q.denom().magnitude();
    let mut k = n.bits() as i64 - d.bits() as i64;
    // adjust so that 2^k <= q < 2^(k+1)
    while pow2(k) > *q {
        k -= 1;
    }
    while pow2(k + 1) <= *q {
        k += 1;
    }
    k
}

/// Smallest k with 2^-k <= q (q > 0); i.e. ceil(log2(1/q)).
pub fn ceil_log2_inv(q: &Q) -> i64 {
    let inv = q.recip();
    let f = log2_floor(&inv);
    if pow2(f) == inv {
        f
    } else {
        f + 1
    }
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// Rational lower/upper rounding of an f64 value to a dyadic with 2^-bits resolution.
pub fn dyadic_below(x: f64, bits: u32) -> Q {
    let scale = (2f64).powi(bits as i32);
    let n = (x * scale).floor();
    Q::new(BigInt::from(n as i128), BigInt::one() << bits) - Q::new(BigInt::one(), BigInt::one() << bits)
}

pub fn dyadic_above(x: f64, bits: u32) -> Q {
    let scale = (2f64).powi(bits as i32);
    let n = (x * scale).ceil();
    Q::new(BigInt::from(n as i128), BigInt::one() << bits) + Q::new(BigInt::one(), BigInt::one() << bits)
}

pub fn q_min(a: Q, b: Q) -> Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn q_max(a: Q, b: Q) -> Q {
    if a >= b {
        a
    } else {
        b
    }
}

/// Serde adapter storing a rational as a `"p/q"` string.
pub mod serde_q {
    use super::{fmt_q, parse_q, Q};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let raw = RationalText::deserialize(d)?;
        raw.into_q().map_err(D::Error::custom)
    }

    /// Accepts either a string or a JSON number.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RationalText {
        Text(String),
        Int(i64),
        Float(f64),
    }

    impl RationalText {
        pub(crate) fn into_q(self) -> Result<Q, String> {
            match self {
                RationalText::Text(t) => parse_q(&t).map_err(|e| e.to_string()),
                RationalText::Int(i) => Ok(super::q_int(i)),
                // JSON floats are taken at their shortest decimal rendering
                RationalText::Float(f) => parse_q(&format!("{f:?}")).map_err(|e| e.to_string()),
            }
        }
    }
}

/// Serde adapter for `Vec<Q>`.
pub mod serde_q_vec {
    use super::{fmt_q, Q};
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&fmt_q(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw = Vec::<super::serde_q::RationalText>::deserialize(d)?;
        raw.into_iter().map(|r| r.into_q().map_err(D::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/6").unwrap(), q_frac(1, 2));
        assert_eq!(parse_q("-7").unwrap(), q_int(-7));
        assert_eq!(parse_q("0.3").unwrap(), q_frac(3, 10));
        assert_eq!(parse_q("-1.25").unwrap(), q_frac(-5, 4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert_eq!(fmt_q(&q_frac(6, 4)), "3/2");
        assert_eq!(fmt_q(&q_int(4)), "4");
    }

    #[test]
    fn powers_and_logs() {
        assert_eq!(pow2(-3), q_frac(1, 8));
        assert_eq!(pow2(5), q_int(32));
        assert_eq!(log2_floor(&q_frac(1, 8)), -3);
        assert_eq!(log2_floor(&q_frac(3, 8)), -2);
        assert_eq!(ceil_log2_inv(&q_frac(1, 4)), 2);
        assert_eq!(ceil_log2_inv(&q_frac(1, 5)), 3);
        let big = BigUint::one() << 5000u32;
        assert!((ln_biguint(&big) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!(dyadic_below(0.3, 40) < q_frac(3, 10));
        assert!(dyadic_above(0.3, 40) > q_frac(3, 10));
    }
}
