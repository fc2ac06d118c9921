//! Non-negative wei amounts with exact arithmetic.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fold::unit_scale;

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Wei(BigUint);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "invalid amount `{0}`: expected a non-negative integer with an optional unit (wei, gwei, szabo, finney, ether)"
)]
pub struct AmountError(pub String);

impl Wei {
    pub fn zero() -> Self {
        Wei(BigUint::zero())
    }

    pub fn new(v: impl Into<BigUint>) -> Self {
        Wei(v.into())
    }

    pub fn ether(n: u64) -> Self {
        Wei(BigUint::from(n) * BigUint::from(10u64).pow(18))
    }

    pub fn finney(n: u64) -> Self {
        Wei(BigUint::from(n) * BigUint::from(10u64).pow(15))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn checked_sub(&self, other: &Wei) -> Option<Wei> {
        (self.0 >= other.0).then(|| Wei(&self.0 - &other.0))
    }

    /// `⌊self × num / den⌋`, the EVM `a * num / den`.
    pub fn mul_div(&self, num: u64, den: u64) -> Wei {
        Wei(&self.0 * BigUint::from(num) / BigUint::from(den))
    }

    pub fn mul_div_wei(&self, num: &Wei, den: &Wei) -> Wei {
        Wei(&self.0 * &num.0 / &den.0)
    }

    pub fn div_floor(&self, den: u64) -> Wei {
        Wei(&self.0 / BigUint::from(den))
    }

    pub fn min(self, other: Wei) -> Wei {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.0.clone()))
    }

    /// Exact ratio `self / other`, `None` when `other` is zero.
    pub fn ratio(&self, other: &Wei) -> Option<BigRational> {
        (!other.is_zero()).then(|| BigRational::new(BigInt::from(self.0.clone()), BigInt::from(other.0.clone())))
    }

    /// Parses `8`, `1ether`, `500finney`, `0.5ether`; the result must be a whole number of wei.
    pub fn parse(text: &str) -> Result<Wei, AmountError> {
        let err = || AmountError(text.to_string());
        let t = text.trim();
        let split = t.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(t.len());
        let (num, unit) = (&t[..split], t[split..].trim());
        let scale = if unit.is_empty() { BigInt::from(1) } else { ether_unit(unit).ok_or_else(err)? };
        let num: String = num.chars().filter(|c| *c != '_').collect();
        if num.is_empty() || num.starts_with('-') || num.starts_with('+') {
            return Err(err());
        }
        let (int, frac) = num.split_once('.').unwrap_or((&num, ""));
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || (int.is_empty() && frac.is_empty()) {
            return Err(err());
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = digits.parse().map_err(|_| err())?;
        let value = BigRational::new(n * scale, BigInt::from(10u32).pow(frac.len() as u32));
        if !value.is_integer() || value.is_negative() {
            return Err(err());
        }
        value.to_integer().to_biguint().map(Wei).ok_or_else(err)
    }
}

impl From<u64> for Wei {
    fn from(v: u64) -> Self {
        Wei(BigUint::from(v))
    }
}

impl From<BigUint> for Wei {
    fn from(v: BigUint) -> Self {
        Wei(v)
    }
}

impl FromStr for Wei {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Wei::parse(s)
    }
}

impl fmt::Display for Wei {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad_integral(true, "", &self.0.to_string())
    }
}

impl Add for Wei {
    type Output = Wei;
    fn add(self, rhs: Wei) -> Wei {
        Wei(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Wei> for &'a Wei {
    type Output = Wei;
    fn add(self, rhs: &Wei) -> Wei {
        Wei(&self.0 + &rhs.0)
    }
}

impl AddAssign<&Wei> for Wei {
    fn add_assign(&mut self, rhs: &Wei) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Wei {
    fn add_assign(&mut self, rhs: Wei) {
        self.0 += rhs.0;
    }
}

impl Sum for Wei {
    fn sum<I: Iterator<Item = Wei>>(iter: I) -> Wei {
        iter.fold(Wei::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Wei> for Wei {
    fn sum<I: Iterator<Item = &'a Wei>>(iter: I) -> Wei {
        iter.fold(Wei::zero(), |mut a, b| {
            a += b;
            a
        })
    }
}

/// Serialized as a decimal string so no consumer truncates it to a float.
impl Serialize for Wei {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Wei {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<BigUint>().map(Wei).map_err(serde::de::Error::custom)
    }
}

fn ether_unit(unit: &str) -> Option<BigInt> {
    matches!(unit, "wei" | "gwei" | "szabo" | "finney" | "ether").then(|| unit_scale(unit)).flatten()
}
