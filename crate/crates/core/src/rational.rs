//! Exact dyadic rational arithmetic: numbers of the form `num / 2^exp`.
//!
//! Every Carleson constant, squared BMO norm and Haar inner product computed
//! in this crate is a dyadic rational, so keeping them exact removes all
//! tolerance questions from the verification suites.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

/// `num / 2^exp` in canonical form: `num` is odd or zero, and `exp == 0`
/// when `num == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    num: BigInt,
    exp: u32,
}

impl DyadicRational {
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Self {
        Self::normalize(num.into(), exp)
    }

    fn normalize(num: BigInt, exp: u32) -> Self {
        if num.is_zero() {
            return Self { num, exp: 0 };
        }
        let tz = num.trailing_zeros().unwrap_or(0).min(exp as u64) as u32;
        Self {
            num: num >> tz,
            exp: exp - tz,
        }
    }

    pub fn zero() -> Self {
        Self {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self {
            num: n.into(),
            exp: 0,
        }
    }

    /// `2^{-e}`, the length of a dyadic interval at level `e`.
    pub fn pow2_neg(e: u32) -> Self {
        Self {
            num: BigInt::from(1),
            exp: e,
        }
    }

    /// `n / 2^e` convenience constructor.
    pub fn ratio(n: impl Into<BigInt>, e: u32) -> Self {
        Self::new(n, e)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    pub fn abs(&self) -> Self {
        Self {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn square(&self) -> Self {
        // odd * odd stays odd, so no renormalization is needed
        Self {
            num: &self.num * &self.num,
            exp: self.exp * 2,
        }
    }

    /// Exact value times `2^k` (k may be negative).
    pub fn scale_pow2(&self, k: i64) -> Self {
        if self.num.is_zero() {
            return Self::zero();
        }
        let e = self.exp as i64 - k;
        if e >= 0 {
            Self::normalize(self.num.clone(), e as u32)
        } else {
            Self {
                num: &self.num << ((-e) as u64),
                exp: 0,
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        let x: f64 = self.num.to_string().parse().unwrap_or(f64::NAN);
        x / 2f64.powi(self.exp as i32)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        // a/2^e vs b/2^f: compare a<<(s-e) vs b<<(s-f) with s = max(e, f)
        let s = self.exp.max(other.exp);
        let lhs = &self.num << ((s - self.exp) as u64);
        let rhs = &other.num << ((s - other.exp) as u64);
        lhs.cmp(&rhs)
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, other: &DyadicRational) -> DyadicRational {
        let s = self.exp.max(other.exp);
        let lhs = &self.num << ((s - self.exp) as u64);
        let rhs = &other.num << ((s - other.exp) as u64);
        DyadicRational::normalize(lhs + rhs, s)
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;
    fn sub(self, other: &DyadicRational) -> DyadicRational {
        let s = self.exp.max(other.exp);
        let lhs = &self.num << ((s - self.exp) as u64);
        let rhs = &other.num << ((s - other.exp) as u64);
        DyadicRational::normalize(lhs - rhs, s)
    }
}

impl Mul for &DyadicRational {
    type Output = DyadicRational;
    fn mul(self, other: &DyadicRational) -> DyadicRational {
        // an even numerator is possible at exp 0, so renormalize
        DyadicRational::normalize(&self.num * &other.num, self.exp + other.exp)
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        DyadicRational {
            num: -&self.num,
            exp: self.exp,
        }
    }
}

macro_rules! forward_binop_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for DyadicRational {
            type Output = DyadicRational;
            fn $method(self, other: DyadicRational) -> DyadicRational {
                (&self).$method(&other)
            }
        }
    };
}
forward_binop_owned!(Add, add);
forward_binop_owned!(Sub, sub);
forward_binop_owned!(Mul, mul);

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

impl std::str::FromStr for DyadicRational {
    type Err = String;

    /// Accepts `n`, `n/2^e`, or `n/d` with `d` a power of two.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let Some((num, den)) = s.split_once('/') else {
            let n: BigInt = s.parse().map_err(|e| format!("bad integer {s:?}: {e}"))?;
            return Ok(Self::from_integer(n));
        };
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|e| format!("bad numerator {num:?}: {e}"))?;
        let den = den.trim();
        let exp = if let Some(e) = den.strip_prefix("2^") {
            e.parse::<u32>().map_err(|e| format!("bad exponent: {e}"))?
        } else {
            let d: u64 = den.parse().map_err(|e| format!("bad denominator {den:?}: {e}"))?;
            if !d.is_power_of_two() {
                return Err(format!("denominator {d} is not a power of two"));
            }
            d.trailing_zeros()
        };
        Ok(Self::new(n, exp))
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("DyadicRational", 2)?;
        s.serialize_field("num", &self.num.to_string())?;
        s.serialize_field("exp", &self.exp)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for DyadicRational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num: String,
            exp: u32,
        }
        let raw = Raw::deserialize(deserializer)?;
        let num: BigInt = raw
            .num
            .parse()
            .map_err(|e| serde::de::Error::custom(format!("bad numerator: {e}")))?;
        Ok(DyadicRational::new(num, raw.exp))
    }
}
