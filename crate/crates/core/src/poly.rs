//! Integer polynomials with exact sign evaluation at dyadic points, primitive
//! GCD and Sturm root counting.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{Dyadic, DyadicInterval};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolynomialError {
    #[error("polynomial must have degree at least 1")]
    Constant,
}

/// Integer polynomial, constant term first. Always trimmed; when nonzero it
/// is primitive with a positive leading coefficient.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    /// Normalizes: trims zeros, divides out the content and makes the leading
    /// coefficient positive.
    pub fn new<I, T>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        let mut p = IntPolynomial { coeffs: coeffs.into_iter().map(Into::into).collect() };
        p.trim();
        p.make_primitive();
        p
    }

    /// As `new`, but rejects constants.
    pub fn nonconstant<I, T>(coeffs: I) -> Result<Self, PolynomialError>
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        let p = IntPolynomial::new(coeffs);
        if p.degree().unwrap_or(0) == 0 {
            Err(PolynomialError::Constant)
        } else {
            Ok(p)
        }
    }

    /// No normalization. Used for coefficient tuples that are already primitive.
    pub(crate) fn from_raw(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPolynomial { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    fn make_primitive(&mut self) {
        let c = self.content();
        if c.is_zero() {
            return;
        }
        let c = if self.coeffs.last().is_some_and(Signed::is_negative) { -c } else { c };
        if !c.is_one() {
            for x in &mut self.coeffs {
                *x = &*x / &c;
            }
        }
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    /// Sum of absolute values of the coefficients.
    pub fn height(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Enumeration size class: degree plus height.
    pub fn size_class(&self) -> BigInt {
        self.height() + BigInt::from(self.degree().unwrap_or(0))
    }

    pub fn derivative(&self) -> IntPolynomial {
        IntPolynomial::from_raw(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    /// Sign of `p(x)` computed exactly with integer Horner evaluation of
    /// `2^(e·d) · p(n / 2^e)`.
    pub fn sign_at(&self, x: &Dyadic) -> Ordering {
        let Some(d) = self.degree() else {
            return Ordering::Equal;
        };
        let e = x.exponent();
        let n = x.numerator();
        let mut acc = self.coeffs[d].clone();
        for i in (0..d).rev() {
            acc = acc * n + (&self.coeffs[i] << (e * (d - i) as u64));
        }
        acc.sign_ordering()
    }

    pub fn is_root(&self, x: &Dyadic) -> bool {
        self.sign_at(x) == Ordering::Equal
    }

    /// Enclosure of `p` over a closed interval by interval Horner evaluation
    /// with exact dyadic endpoints.
    pub fn eval_interval(&self, x: &DyadicInterval) -> DyadicInterval {
        let Some(d) = self.degree() else {
            return DyadicInterval::point(Dyadic::zero());
        };
        let mut acc = DyadicInterval::point(Dyadic::from_int(self.coeffs[d].clone()));
        for i in (0..d).rev() {
            acc = acc.mul(x).add(&DyadicInterval::point(Dyadic::from_int(self.coeffs[i].clone())));
        }
        acc
    }

    /// Remainder of `self` by `divisor` scaled by `|lc(divisor)|^(δ+1)`, so the
    /// sign of the result agrees with the true remainder.
    pub fn signed_pseudo_rem(&self, divisor: &IntPolynomial) -> IntPolynomial {
        let (Some(dn), Some(dd)) = (self.degree(), divisor.degree()) else {
            return self.clone();
        };
        if dn < dd {
            return self.clone();
        }
        let lc = divisor.coeffs[dd].clone();
        let mut r = self.coeffs.clone();
        let mut steps = 0u32;
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let top = r[k].clone();
            for c in r.iter_mut() {
                *c *= &lc;
            }
            let shift = k - dd;
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                r[j + shift] -= &top * dc;
            }
            steps += 1;
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
            if r.len() <= dd {
                break;
            }
        }
        // total scaling applied is lc^steps; finish to lc^(dn-dd+1)
        let total = (dn - dd + 1) as u32;
        let remaining = total - steps.min(total);
        let scale = num_traits::pow(lc.clone(), remaining as usize);
        if !scale.is_one() {
            for c in r.iter_mut() {
                *c *= &scale;
            }
        }
        if lc.is_negative() && total % 2 == 1 {
            for c in r.iter_mut() {
                *c = -&*c;
            }
        }
        IntPolynomial::from_raw(r)
    }

    /// Primitive GCD with positive leading coefficient.
    pub fn gcd(&self, other: &IntPolynomial) -> IntPolynomial {
        let mut a = IntPolynomial::new(self.coeffs.clone());
        let mut b = IntPolynomial::new(other.coeffs.clone());
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = IntPolynomial::new(a.signed_pseudo_rem(&b).coeffs);
            a = b;
            b = r;
        }
        a
    }

    /// Exact quotient for a divisor known to divide `self` over the rationals;
    /// the result is made primitive.
    pub fn exact_quotient(&self, divisor: &IntPolynomial) -> IntPolynomial {
        let (Some(dn), Some(dd)) = (self.degree(), divisor.degree()) else {
            return self.clone();
        };
        if dn < dd {
            return IntPolynomial::new(vec![BigInt::one()]);
        }
        // scale so every division step is exact
        let lc = divisor.coeffs[dd].clone();
        let scale = num_traits::pow(lc.clone(), dn - dd + 1);
        let mut r: Vec<BigInt> = self.coeffs.iter().map(|c| c * &scale).collect();
        let mut q = vec![BigInt::zero(); dn - dd + 1];
        for k in (dd..=dn).rev() {
            let top = r[k].clone();
            let (coef, rem) = top.div_rem(&lc);
            debug_assert!(rem.is_zero());
            q[k - dd] = coef.clone();
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                r[j + k - dd] -= &coef * dc;
            }
        }
        IntPolynomial::new(q)
    }

    /// Square-free part: `p / gcd(p, p')`, primitive.
    pub fn square_free(&self) -> IntPolynomial {
        if self.degree().unwrap_or(0) <= 1 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree().unwrap_or(0) == 0 {
            self.clone()
        } else {
            self.exact_quotient(&g)
        }
    }

    pub fn sturm_sequence(&self) -> SturmSequence {
        let mut seq = vec![self.clone()];
        let d = self.derivative();
        if !d.is_zero() {
            seq.push(d);
        }
        while seq.len() >= 2 {
            let n = seq.len();
            let r = seq[n - 2].signed_pseudo_rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            // negate, then strip a positive content only
            let neg: Vec<BigInt> = r.coeffs.iter().map(|c| -c).collect();
            let content = r.content();
            let next = IntPolynomial::from_raw(neg.into_iter().map(|c| c / &content).collect());
            seq.push(next);
        }
        SturmSequence { polys: seq }
    }

    pub fn to_string_in(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let show_coeff = i == 0 || !a.is_one();
            if show_coeff {
                out.push_str(&a.to_string());
            }
            match i {
                0 => {}
                1 => out.push_str(var),
                _ => out.push_str(&format!("{var}^{i}")),
            }
        }
        out
    }
}

trait SignOrdering {
    fn sign_ordering(&self) -> Ordering;
}

impl SignOrdering for BigInt {
    fn sign_ordering(&self) -> Ordering {
        self.cmp(&BigInt::zero())
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_in("x"))
    }
}

impl fmt::Debug for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPolynomial({self})")
    }
}

impl Serialize for IntPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coeffs.iter().map(ToString::to_string).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let coeffs = v
            .iter()
            .map(|s| s.parse::<BigInt>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(IntPolynomial::from_raw(coeffs))
    }
}

/// Sturm chain of a polynomial. For square-free `p`, `variations(a) −
/// variations(b)` counts the distinct roots in `(a, b]`.
#[derive(Clone, Debug)]
pub struct SturmSequence {
    polys: Vec<IntPolynomial>,
}

impl SturmSequence {
    pub fn variations(&self, x: &Dyadic) -> usize {
        let mut count = 0;
        let mut last = Ordering::Equal;
        for p in &self.polys {
            let s = p.sign_at(x);
            if s == Ordering::Equal {
                continue;
            }
            if last != Ordering::Equal && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    /// Distinct roots in the half-open `(lo, hi]`.
    pub fn count_half_open(&self, lo: &Dyadic, hi: &Dyadic) -> usize {
        self.variations(lo).saturating_sub(self.variations(hi))
    }

    /// Distinct roots strictly inside `(lo, hi)`.
    pub fn count_open(&self, lo: &Dyadic, hi: &Dyadic) -> usize {
        let n = self.count_half_open(lo, hi);
        if n > 0 && self.polys[0].is_root(hi) {
            n - 1
        } else {
            n
        }
    }

    /// Distinct roots in the closed `[lo, hi]`.
    pub fn count_closed(&self, lo: &Dyadic, hi: &Dyadic) -> usize {
        self.count_half_open(lo, hi) + usize::from(self.polys[0].is_root(lo))
    }

    pub fn poly(&self) -> &IntPolynomial {
        &self.polys[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::new(c.iter().copied())
    }

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn normalization_is_primitive_and_positive() {
        let q = p(&[4, 0, -2]);
        assert_eq!(q.coeffs(), &[BigInt::from(-2), BigInt::zero(), BigInt::one()]);
        assert_eq!(p(&[0, 2, 0, 0]).coeffs(), &[BigInt::zero(), BigInt::one()]);
        assert!(IntPolynomial::nonconstant([5]).is_err());
    }

    #[test]
    fn sign_at_dyadic_points() {
        let q = p(&[-2, 0, 1]);
        assert_eq!(q.sign_at(&d("1")), Ordering::Less);
        assert_eq!(q.sign_at(&d("3/2")), Ordering::Greater);
        assert_eq!(p(&[-1, 2]).sign_at(&d("1/2")), Ordering::Equal);
        assert_eq!(p(&[-1, 2]).sign_at(&d("-4")), Ordering::Less);
    }

    #[test]
    fn gcd_of_scaled_polys() {
        let g = p(&[-2, 0, 1]).gcd(&p(&[-4, 0, 2]));
        assert_eq!(g, p(&[-2, 0, 1]));
        // (x-1)(x+2) and (x-1)(x-3)
        let g = p(&[-2, 1, 1]).gcd(&p(&[3, -4, 1]));
        assert_eq!(g, p(&[-1, 1]));
        let g = p(&[1, 0, 1]).gcd(&p(&[-1, 1]));
        assert_eq!(g.degree(), Some(0));
    }

    #[test]
    fn square_free_part() {
        // (x-1)^2 (x+1) = x^3 - x^2 - x + 1
        let q = p(&[1, -1, -1, 1]);
        assert_eq!(q.square_free(), p(&[-1, 0, 1]));
        assert_eq!(p(&[0, 0, 1]).square_free(), p(&[0, 1]));
    }

    #[test]
    fn sturm_counts() {
        let s = p(&[-2, 0, 1]).sturm_sequence();
        assert_eq!(s.count_open(&d("-4"), &d("4")), 2);
        assert_eq!(s.count_open(&d("0"), &d("4")), 1);
        assert_eq!(p(&[1, 0, 1]).sturm_sequence().count_open(&d("-4"), &d("4")), 0);
        // roots at endpoints are excluded from the open count
        let s = p(&[0, -1, 1]).sturm_sequence(); // x^2 - x, roots 0 and 1
        assert_eq!(s.count_open(&d("0"), &d("1")), 0);
        assert_eq!(s.count_closed(&d("0"), &d("1")), 2);
        assert_eq!(s.count_half_open(&d("0"), &d("1")), 1);
    }

    #[test]
    fn interval_evaluation_encloses() {
        let q = p(&[-2, 0, 1]);
        let i = DyadicInterval::new(d("1"), d("3/2")).unwrap();
        let e = q.eval_interval(&i);
        assert!(e.lo <= d("-1") && e.hi >= d("1/4"));
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(p(&[-2, 0, 1]).to_string(), "x^2 - 2");
        assert_eq!(p(&[1, -3]).to_string(), "3x - 1");
    }
}
