//! Exact dyadic rationals `num / 2^exp` and intervals with dyadic endpoints.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A dyadic rational `num · 2^(−exp)` kept in lowest terms: when `exp > 0`
/// the numerator is odd.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseDyadicError {
    #[error("empty number")]
    Empty,
    #[error("`{0}` is not a dyadic rational (denominator must be a power of two)")]
    NotDyadic(String),
    #[error("malformed number `{0}`")]
    Malformed(String),
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, exp: u64) -> Self {
        let mut d = Dyadic { num: num.into(), exp };
        d.normalize();
        d
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Dyadic { num: n.into(), exp: 0 }
    }

    pub fn zero() -> Self {
        Dyadic::from_int(0)
    }

    pub fn one() -> Self {
        Dyadic::from_int(1)
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i64) -> Self {
        if k >= 0 {
            Dyadic::from_int(BigInt::one() << (k as u64))
        } else {
            Dyadic::new(1, k.unsigned_abs())
        }
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        if self.exp > 0 {
            let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp);
            if tz > 0 {
                self.num >>= tz;
                self.exp -= tz;
            }
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    /// Power of two in the denominator.
    pub fn exponent(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn signum(&self) -> i32 {
        if self.num.is_positive() {
            1
        } else if self.num.is_negative() {
            -1
        } else {
            0
        }
    }

    /// Numerator after rescaling to denominator `2^exp`; `exp` must be at
    /// least `self.exponent()`.
    pub fn scaled_numerator(&self, exp: u64) -> BigInt {
        debug_assert!(exp >= self.exp);
        &self.num << (exp - self.exp)
    }

    pub fn halve(&self) -> Self {
        Dyadic::new(self.num.clone(), self.exp + 1)
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        if k >= 0 {
            let k = k as u64;
            if self.exp >= k {
                Dyadic::new(self.num.clone(), self.exp - k)
            } else {
                Dyadic::new(&self.num << (k - self.exp), 0)
            }
        } else {
            Dyadic::new(self.num.clone(), self.exp + k.unsigned_abs())
        }
    }

    pub fn midpoint(a: &Dyadic, b: &Dyadic) -> Dyadic {
        (a + b).halve()
    }

    /// `floor(self · 2^p)`.
    pub fn floor_scaled(&self, p: u64) -> BigInt {
        if p >= self.exp {
            &self.num << (p - self.exp)
        } else {
            self.num.div_floor(&(BigInt::one() << (self.exp - p)))
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    /// `ceil(log2(|self|))` for a nonzero value.
    pub fn ceil_log2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let n = self.num.abs();
        let bits = n.bits() as i64;
        let is_pow2 = (&n & (&n - 1u32)).is_zero();
        let log = if is_pow2 { bits - 1 } else { bits };
        Some(log - self.exp as i64)
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.num.to_f64().unwrap_or(f64::NAN);
        if self.exp > 1000 {
            // shift into range before converting
            let shift = self.num.bits().saturating_sub(60);
            let top = (&self.num >> shift).to_f64().unwrap_or(f64::NAN);
            return top * 2f64.powi(shift as i32 - self.exp as i32);
        }
        n / 2f64.powi(self.exp as i32)
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        self.scaled_numerator(e).cmp(&other.scaled_numerator(e))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new(self.scaled_numerator(e) + rhs.scaled_numerator(e), e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new(self.scaled_numerator(e) - rhs.scaled_numerator(e), e)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -&self.num, exp: self.exp }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::from_int(n)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, BigInt::one() << self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts integers (`-4`), fractions with power-of-two denominators
/// (`3/8`) and finite decimals whose value is dyadic (`0.625`).
impl FromStr for Dyadic {
    type Err = ParseDyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseDyadicError::Empty);
        }
        let malformed = || ParseDyadicError::Malformed(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let num: BigInt = n.trim().parse().map_err(|_| malformed())?;
            let den: BigInt = d.trim().parse().map_err(|_| malformed())?;
            return from_ratio(num, den).ok_or_else(|| ParseDyadicError::NotDyadic(s.to_string()));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            let negative = int.trim_start().starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            let digits = format!("{int_digits}{frac}");
            let mut num: BigInt = digits.parse().map_err(|_| malformed())?;
            if negative {
                num = -num;
            }
            let den = num_traits::pow(BigInt::from(10), frac.len());
            return from_ratio(num, den).ok_or_else(|| ParseDyadicError::NotDyadic(s.to_string()));
        }
        let num: BigInt = s.parse().map_err(|_| malformed())?;
        Ok(Dyadic::from_int(num))
    }
}

fn from_ratio(num: BigInt, den: BigInt) -> Option<Dyadic> {
    if den.is_zero() {
        return None;
    }
    let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
    let g = num.gcd(&den);
    let (num, den) = if g.is_zero() { (num, den) } else { (num / &g, den / &g) };
    let tz = den.trailing_zeros().unwrap_or(0);
    if den != (BigInt::one() << tz) {
        return None;
    }
    Some(Dyadic::new(num, tz))
}

/// Wire form: decimal numerator string plus the power-of-two exponent of
/// the denominator.
#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    num: String,
    exp: u64,
}

impl Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DyadicRepr { num: self.num.to_string(), exp: self.exp }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = DyadicRepr::deserialize(d)?;
        let num: BigInt = r.num.parse().map_err(serde::de::Error::custom)?;
        Ok(Dyadic::new(num, r.exp))
    }
}

/// An interval with dyadic endpoints, `lo < hi`. Isolating intervals are
/// read as open, digit-prefix intervals as closed; the type is shared.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("degenerate interval: lo {lo} is not below hi {hi}")]
pub struct DegenerateInterval {
    pub lo: String,
    pub hi: String,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Result<Self, DegenerateInterval> {
        if lo < hi {
            Ok(DyadicInterval { lo, hi })
        } else {
            Err(DegenerateInterval { lo: lo.to_string(), hi: hi.to_string() })
        }
    }

    /// Panicking constructor for literals known to be well-ordered.
    pub fn from_ints(lo: i64, hi: i64) -> Self {
        DyadicInterval::new(lo.into(), hi.into()).expect("lo < hi")
    }

    pub fn unit() -> Self {
        DyadicInterval::from_ints(0, 1)
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Dyadic {
        Dyadic::midpoint(&self.lo, &self.hi)
    }

    pub fn lower_half(&self) -> Self {
        DyadicInterval { lo: self.lo.clone(), hi: self.midpoint() }
    }

    pub fn upper_half(&self) -> Self {
        DyadicInterval { lo: self.midpoint(), hi: self.hi.clone() }
    }

    /// Open containment.
    pub fn contains_open(&self, x: &Dyadic) -> bool {
        &self.lo < x && x < &self.hi
    }

    pub fn contains_closed(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Closed intervals share no point.
    pub fn disjoint_closed(&self, other: &DyadicInterval) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    /// Open intersection, if nonempty.
    pub fn intersect_open(&self, other: &DyadicInterval) -> Option<DyadicInterval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo < hi).then_some(DyadicInterval { lo, hi })
    }

    /// `self ⊆ other` as closed sets.
    pub fn is_subset_of(&self, other: &DyadicInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Interval sum (closed semantics).
    pub fn add(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn mul(&self, other: &DyadicInterval) -> DyadicInterval {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().unwrap_or_default();
        let hi = products.iter().max().cloned().unwrap_or_default();
        DyadicInterval { lo, hi }
    }

    pub fn point(x: Dyadic) -> DyadicInterval {
        DyadicInterval { lo: x.clone(), hi: x }
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.lo, self.hi)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}
