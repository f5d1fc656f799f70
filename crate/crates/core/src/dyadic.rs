//! Exact dyadic rationals `n / 2^k`.
//!
//! Every distance on a shift space, every tolerance derived from a tracing
//! level and every truncated weighted-sum metric on `{0,1}^G` is a dyadic
//! rational, so they are compared exactly instead of through `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A non-negative dyadic rational, kept normalised (odd numerator, or zero
/// with exponent 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u32,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigUint>, exponent: u32) -> Self {
        let mut d = Dyadic {
            numerator: numerator.into(),
            exponent,
        };
        d.normalize();
        d
    }

    /// `2^{-k}`.
    pub fn pow2_neg(k: u32) -> Self {
        Dyadic {
            numerator: BigUint::one(),
            exponent: k,
        }
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(self.exponent as u64) as u32;
        if shift > 0 {
            self.numerator >>= shift;
            self.exponent -= shift;
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// `Some(k)` when the value is exactly `2^{-k}`.
    pub fn as_pow2_neg(&self) -> Option<u32> {
        self.numerator.is_one().then_some(self.exponent)
    }

    /// Smallest `j >= 0` with `2^{-j} <= self`, for values in `(0, 1]`.
    pub fn ceil_neg_log2(&self) -> Option<u32> {
        if self.is_zero() || *self > Dyadic::one() {
            return None;
        }
        // bits(n) - 1 = floor(log2 n); self >= 2^{-j} <=> n * 2^j >= 2^e
        let bits = self.numerator.bits() as u32;
        let floor_log = bits - 1;
        let j = self.exponent - floor_log;
        Some(j)
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::INFINITY);
        n * 2f64.powi(-(self.exponent as i32))
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }
}

impl Zero for Dyadic {
    fn zero() -> Self {
        Dyadic {
            numerator: BigUint::zero(),
            exponent: 0,
        }
    }

    fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }
}

impl One for Dyadic {
    fn one() -> Self {
        Dyadic::pow2_neg(0)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &rhs.numerator << (e - rhs.exponent);
        Dyadic::new(a + b, e)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(self.numerator * rhs.numerator, self.exponent + rhs.exponent)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else if self.numerator.is_one() {
            write!(f, "2^-{}", self.exponent)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `2^-k`, `n/2^k`, `n/d` with `d` a power of two, integers and
    /// terminating decimals whose value is dyadic (`0.125`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a dyadic rational: {s:?}"));
        if let Some(k) = s.strip_prefix("2^-") {
            let k: u32 = k.parse().map_err(|_| bad())?;
            return Ok(Dyadic::pow2_neg(k));
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigUint = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim();
            if let Some(k) = d.strip_prefix("2^") {
                let k: u32 = k.parse().map_err(|_| bad())?;
                return Ok(Dyadic::new(n, k));
            }
            let d: BigUint = d.parse().map_err(|_| bad())?;
            if d.is_zero() || d.count_ones() != 1 {
                return Err(bad());
            }
            let k = d.trailing_zeros().unwrap_or(0) as u32;
            return Ok(Dyadic::new(n, k));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: BigUint = if int.is_empty() {
                BigUint::zero()
            } else {
                int.parse().map_err(|_| bad())?
            };
            let digits = frac.len() as u32;
            let frac_n: BigUint = frac.parse().map_err(|_| bad())?;
            let scale = BigUint::from(10u32).pow(digits);
            // value = (int * 10^d + frac) / (2^d 5^d); dyadic iff 5^d divides the numerator
            let n = int * &scale + frac_n;
            let five = BigUint::from(5u32).pow(digits);
            if !(&n % &five).is_zero() {
                return Err(bad());
            }
            return Ok(Dyadic::new(n / five, digits));
        }
        let n: BigUint = s.parse().map_err(|_| bad())?;
        Ok(Dyadic::new(n, 0))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_and_compares() {
        assert_eq!(Dyadic::new(4u32, 5), Dyadic::pow2_neg(3));
        assert!(Dyadic::pow2_neg(3) < Dyadic::pow2_neg(2));
        assert_eq!(Dyadic::pow2_neg(1) + Dyadic::pow2_neg(1), Dyadic::one());
        assert_eq!(Dyadic::new(3u32, 2).to_f64(), 0.75);
    }

    #[test]
    fn parses_all_forms() {
        for s in ["2^-3", "1/8", "1/2^3", "0.125", ".125"] {
            assert_eq!(s.parse::<Dyadic>().unwrap(), Dyadic::pow2_neg(3), "{s}");
        }
        assert_eq!("1".parse::<Dyadic>().unwrap(), Dyadic::one());
        assert!("0.1".parse::<Dyadic>().is_err());
        assert!("1/3".parse::<Dyadic>().is_err());
    }

    #[test]
    fn ceil_neg_log2() {
        assert_eq!(Dyadic::pow2_neg(3).ceil_neg_log2(), Some(3));
        assert_eq!(Dyadic::new(3u32, 4).ceil_neg_log2(), Some(3));
        assert_eq!(Dyadic::one().ceil_neg_log2(), Some(0));
        assert_eq!(Dyadic::zero().ceil_neg_log2(), None);
    }
}
