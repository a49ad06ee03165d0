//! Exact binary rationals `m * 2^e`.
//!
//! Every value produced by the hybrid arithmetic path is of this form, so the
//! type doubles as the exact comparison currency for oracles, error budgets,
//! and interval endpoints. Arithmetic is exact unless [`Dyadic::round_to_bits`]
//! is called explicitly, which is how the high-precision reference solver
//! emulates a software big-float.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

/// An exact binary rational, canonically `mantissa * 2^exponent` with an odd
/// mantissa (or zero with exponent zero). Canonical form makes structural
/// equality coincide with numeric equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    /// Builds `mantissa * 2^exponent`, normalizing to canonical form.
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        let mut d = Dyadic { mantissa, exponent };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mantissa: BigInt::from(1), exponent: 0 }
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Dyadic { mantissa: BigInt::from(1), exponent: e }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        Dyadic::new(BigInt::from_biguint(Sign::Plus, v.clone()), 0)
    }

    /// Exact conversion from a finite binary64 value. Returns `None` for NaN
    /// and infinities.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Some(Dyadic::new(BigInt::from(sign) * BigInt::from(mant), exp))
    }

    fn canonicalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let shift = self.mantissa.trailing_zeros().unwrap_or(0);
        if shift > 0 {
            self.mantissa >>= shift;
            self.exponent += shift as i64;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Number of significant bits in the mantissa.
    pub fn mantissa_bits(&self) -> u64 {
        self.mantissa.magnitude().bits()
    }

    /// `floor(log2 |v|)`; `None` for zero.
    pub fn ilog2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        Some(self.mantissa_bits() as i64 - 1 + self.exponent)
    }

    pub fn abs(&self) -> Self {
        Dyadic { mantissa: self.mantissa.abs(), exponent: if self.mantissa.is_zero() { 0 } else { self.exponent } }
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mantissa: self.mantissa.clone(), exponent: self.exponent + k }
    }

    fn align(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        // Aligns both mantissas to the smaller exponent.
        let e = a.exponent.min(b.exponent);
        let ma = &a.mantissa << (a.exponent - e) as u64;
        let mb = &b.mantissa << (b.exponent - e) as u64;
        (ma, mb, e)
    }

    pub fn cmp_value(&self, other: &Dyadic) -> Ordering {
        let sa = self.mantissa.sign();
        let sb = other.mantissa.sign();
        if sa != sb {
            return match (sa, sb) {
                (Sign::Minus, _) => Ordering::Less,
                (Sign::Plus, _) => Ordering::Greater,
                (Sign::NoSign, Sign::Plus) => Ordering::Less,
                (Sign::NoSign, Sign::Minus) => Ordering::Greater,
                _ => Ordering::Equal,
            };
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        // Same nonzero sign: a differing floor(log2) decides without alignment.
        let (la, lb) = (self.ilog2().unwrap(), other.ilog2().unwrap());
        if la != lb {
            let mag = la.cmp(&lb);
            return if sa == Sign::Plus { mag } else { mag.reverse() };
        }
        let (ma, mb, _) = Dyadic::align(self, other);
        ma.cmp(&mb)
    }

    /// Rounds to at most `bits` significant bits, ties to even. `bits >= 1`.
    pub fn round_to_bits(&self, bits: u32) -> Self {
        assert!(bits >= 1, "precision must be at least one bit");
        let nbits = self.mantissa_bits();
        if nbits <= bits as u64 {
            return self.clone();
        }
        let drop = nbits - bits as u64;
        let neg = self.mantissa.is_negative();
        let mag = self.mantissa.magnitude().clone();
        let mut q = &mag >> drop;
        let r = mag - (&q << drop);
        let half = BigUint::from(1u8) << (drop - 1);
        if r > half || (r == half && (&q & BigUint::from(1u8)) == BigUint::from(1u8)) {
            q += 1u8;
        }
        let m = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, q);
        Dyadic::new(m, self.exponent + drop as i64)
    }

    /// Rounds to the nearest integer, ties to even.
    pub fn round_to_int(&self) -> BigInt {
        if self.exponent >= 0 {
            return &self.mantissa << self.exponent as u64;
        }
        let drop = (-self.exponent) as u64;
        let neg = self.mantissa.is_negative();
        let mag = self.mantissa.magnitude().clone();
        let mut q = &mag >> drop;
        let r = mag - (&q << drop);
        let half = BigUint::from(1u8) << (drop - 1);
        if r > half || (r == half && (&q & BigUint::from(1u8)) == BigUint::from(1u8)) {
            q += 1u8;
        }
        BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, q)
    }

    /// Smallest integer `>= self`, for nonnegative values, as a `BigUint`.
    pub fn ceil_to_biguint(&self) -> BigUint {
        assert!(!self.is_negative(), "ceil_to_biguint requires a nonnegative value");
        if self.exponent >= 0 {
            return self.mantissa.magnitude() << self.exponent as u64;
        }
        let drop = (-self.exponent) as u64;
        let mag = self.mantissa.magnitude();
        let q = mag >> drop;
        if (&q << drop) == *mag {
            q
        } else {
            q + 1u8
        }
    }

    /// Nearest binary64 value. Saturates to +/-inf outside the f64 range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round_to_bits(53);
        let m = r.mantissa.to_i64().expect("53-bit mantissa fits i64") as f64;
        let e = r.exponent;
        if e > 2000 {
            return if m > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        if e < -2200 {
            return if m > 0.0 { 0.0 } else { -0.0 };
        }
        // Split the scale so each factor stays inside the f64 exponent range.
        let e1 = e.clamp(-1000, 1000);
        let e2 = e - e1;
        m * 2f64.powi(e1 as i32) * 2f64.powi(e2 as i32)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

/// Error from parsing a dyadic literal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid dyadic literal {input:?}: expected `<int>` or `<int>*2^<int>`")]
pub struct ParseDyadicError {
    pub input: String,
}

impl FromStr for Dyadic {
    type Err = ParseDyadicError;

    /// Parses `"<int>"` or `"<int>*2^<int>"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseDyadicError { input: s.to_string() };
        let s = s.trim();
        match s.split_once("*2^") {
            None => {
                let m = BigInt::from_str(s).map_err(|_| bad())?;
                Ok(Dyadic::new(m, 0))
            }
            Some((m, e)) => {
                let m = BigInt::from_str(m.trim()).map_err(|_| bad())?;
                let e = i64::from_str(e.trim()).map_err(|_| bad())?;
                Ok(Dyadic::new(m, e))
            }
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (ma, mb, e) = Dyadic::align(self, rhs);
        Dyadic::new(ma + mb, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        if rhs.is_zero() {
            return self.clone();
        }
        let (ma, mb, e) = Dyadic::align(self, rhs);
        Dyadic::new(ma - mb, e)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        Dyadic::new(&self.mantissa * &rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mantissa: -self.mantissa.clone(), exponent: if self.mantissa.is_zero() { 0 } else { self.exponent } }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}
