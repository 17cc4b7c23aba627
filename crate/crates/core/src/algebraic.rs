//! Real algebraic numbers as (square-free polynomial, isolating interval)
//! pairs, exact comparison, and the canonical enumeration of all algebraic
//! reals inside a dyadic window.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{Dyadic, DyadicInterval};
use crate::poly::IntPolynomial;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraicError {
    #[error("isolator {isolator} holds {roots} roots of {poly}, expected exactly one")]
    NotIsolating { poly: String, isolator: String, roots: usize },
    #[error("isolator endpoint is a root of {0}")]
    RootAtEndpoint(String),
    #[error("{0} is not square-free")]
    NotSquareFree(String),
    #[error("polynomial must have degree at least 1")]
    Constant,
}

/// Exactly one real root of `poly` lies strictly inside `isolator`; `poly` is
/// square-free and nonzero at both endpoints, so it changes sign across the
/// isolator.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraicReal {
    poly: IntPolynomial,
    isolator: DyadicInterval,
}

impl AlgebraicReal {
    /// Validating constructor: squares-free `poly` first, then checks the
    /// isolation contract with a Sturm count.
    pub fn new(poly: IntPolynomial, isolator: DyadicInterval) -> Result<Self, AlgebraicError> {
        if poly.degree().unwrap_or(0) == 0 {
            return Err(AlgebraicError::Constant);
        }
        let poly = poly.square_free();
        let a = AlgebraicReal { poly, isolator };
        a.validate()?;
        Ok(a)
    }

    /// The rational `n / 2^e` as the root of `2^e x − n`.
    pub fn from_dyadic(x: &Dyadic) -> Self {
        let poly = IntPolynomial::new([-x.numerator().clone(), BigInt::one() << x.exponent()]);
        let half = Dyadic::pow2(-(x.exponent() as i64) - 1);
        AlgebraicReal { poly, isolator: DyadicInterval { lo: x - &half, hi: x + &half } }
    }

    /// Checks every invariant from the stored data alone.
    pub fn validate(&self) -> Result<(), AlgebraicError> {
        if self.poly.degree().unwrap_or(0) == 0 {
            return Err(AlgebraicError::Constant);
        }
        if self.poly.square_free().degree() != self.poly.degree() {
            return Err(AlgebraicError::NotSquareFree(self.poly.to_string()));
        }
        if self.isolator.lo >= self.isolator.hi {
            return Err(AlgebraicError::NotIsolating {
                poly: self.poly.to_string(),
                isolator: self.isolator.to_string(),
                roots: 0,
            });
        }
        if self.poly.is_root(&self.isolator.lo) || self.poly.is_root(&self.isolator.hi) {
            return Err(AlgebraicError::RootAtEndpoint(self.poly.to_string()));
        }
        let roots = self.poly.sturm_sequence().count_open(&self.isolator.lo, &self.isolator.hi);
        if roots != 1 {
            return Err(AlgebraicError::NotIsolating {
                poly: self.poly.to_string(),
                isolator: self.isolator.to_string(),
                roots,
            });
        }
        Ok(())
    }

    pub fn poly(&self) -> &IntPolynomial {
        &self.poly
    }

    pub fn isolator(&self) -> &DyadicInterval {
        &self.isolator
    }

    /// One bisection step; width halves and the root stays inside.
    pub fn refine_once(&mut self) {
        let m = self.isolator.midpoint();
        match self.poly.sign_at(&m) {
            Ordering::Equal => {
                let q = self.isolator.width().mul_pow2(-2);
                self.isolator = DyadicInterval { lo: &m - &q, hi: &m + &q };
            }
            s if s == self.poly.sign_at(&self.isolator.lo) => self.isolator.lo = m,
            _ => self.isolator.hi = m,
        }
    }

    /// Refines in place until the isolator width is at most `2^width_log2`.
    pub fn refine_to(&mut self, width_log2: i64) {
        let target = Dyadic::pow2(width_log2);
        while self.isolator.width() > target {
            self.refine_once();
        }
    }

    /// Exact comparison of the represented real with a dyadic point;
    /// refines `self` as needed.
    pub fn cmp_dyadic(&mut self, x: &Dyadic) -> Ordering {
        loop {
            if x <= &self.isolator.lo {
                return Ordering::Greater;
            }
            if x >= &self.isolator.hi {
                return Ordering::Less;
            }
            if self.poly.is_root(x) {
                return Ordering::Equal;
            }
            self.refine_once();
        }
    }

    /// The value when it is a dyadic rational recognizable from a linear
    /// polynomial with power-of-two leading coefficient.
    pub fn as_dyadic(&self) -> Option<Dyadic> {
        if self.poly.degree() != Some(1) {
            return None;
        }
        let lead = &self.poly.coeffs()[1];
        let tz = lead.trailing_zeros()?;
        if lead != &(BigInt::one() << tz) {
            return None;
        }
        Some(Dyadic::new(-self.poly.coeffs()[0].clone(), tz))
    }

    /// Approximation for display only.
    pub fn to_f64(&self) -> f64 {
        let mut a = self.clone();
        a.refine_to(-60);
        a.isolator.midpoint().to_f64()
    }
}

impl fmt::Debug for AlgebraicReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root of {} in {:?} (≈{})", self.poly, self.isolator, self.to_f64())
    }
}

/// Isolating intervals of the distinct real roots of `poly` strictly inside
/// the open `window`, ascending and pairwise disjoint.
pub fn isolate_roots(poly: &IntPolynomial, window: &DyadicInterval) -> Vec<DyadicInterval> {
    if poly.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let sf = poly.square_free();
    let sturm = sf.sturm_sequence();
    let mut out = Vec::new();
    let total = sturm.count_open(&window.lo, &window.hi);
    isolate_rec(&sf, &sturm, window.clone(), total, &mut out);
    out
}

fn isolate_rec(
    p: &IntPolynomial,
    sturm: &crate::poly::SturmSequence,
    iv: DyadicInterval,
    count: usize,
    out: &mut Vec<DyadicInterval>,
) {
    if count == 0 {
        return;
    }
    if count == 1 && !p.is_root(&iv.lo) && !p.is_root(&iv.hi) {
        out.push(iv);
        return;
    }
    let m = iv.midpoint();
    if p.is_root(&m) {
        let left = sturm.count_open(&iv.lo, &m);
        isolate_rec(p, sturm, DyadicInterval { lo: iv.lo.clone(), hi: m.clone() }, left, out);
        let mut q = iv.width().mul_pow2(-2);
        loop {
            let lo = &m - &q;
            let hi = &m + &q;
            if sturm.count_closed(&lo, &hi) == 1 {
                out.push(DyadicInterval { lo, hi });
                break;
            }
            q = q.halve();
        }
        let right = count - left - 1;
        isolate_rec(p, sturm, DyadicInterval { lo: m, hi: iv.hi }, right, out);
    } else {
        let left = sturm.count_open(&iv.lo, &m);
        isolate_rec(p, sturm, DyadicInterval { lo: iv.lo.clone(), hi: m.clone() }, left, out);
        isolate_rec(p, sturm, DyadicInterval { lo: m, hi: iv.hi }, count - left, out);
    }
}

/// The real roots of `poly` in `window` as validated algebraic reals, ascending.
pub fn roots_in(poly: &IntPolynomial, window: &DyadicInterval) -> Vec<AlgebraicReal> {
    let sf = poly.square_free();
    isolate_roots(&sf, window)
        .into_iter()
        .map(|isolator| AlgebraicReal { poly: sf.clone(), isolator })
        .collect()
}

/// Refines until the isolator width is at most `2^target_width_log2`.
/// Idempotent once the target is met.
pub fn refine(a: &AlgebraicReal, target_width_log2: i64) -> AlgebraicReal {
    let mut out = a.clone();
    out.refine_to(target_width_log2);
    out
}

/// Exact trichotomy. Equality is decided by a common root of the gcd inside
/// the intersection of the isolators, never by tolerance.
pub fn compare(a: &AlgebraicReal, b: &AlgebraicReal) -> Ordering {
    let mut a = a.clone();
    let mut b = b.clone();
    let mut equality_checked = false;
    loop {
        if a.isolator.hi <= b.isolator.lo {
            return Ordering::Less;
        }
        if b.isolator.hi <= a.isolator.lo {
            return Ordering::Greater;
        }
        if !equality_checked {
            equality_checked = true;
            if same_number(&a, &b) {
                return Ordering::Equal;
            }
        }
        if a.isolator.width() >= b.isolator.width() {
            a.refine_once();
        } else {
            b.refine_once();
        }
    }
}

fn same_number(a: &AlgebraicReal, b: &AlgebraicReal) -> bool {
    let Some(common) = a.isolator.intersect_open(&b.isolator) else {
        return false;
    };
    let g = a.poly.gcd(&b.poly);
    if g.degree().unwrap_or(0) == 0 {
        return false;
    }
    g.sturm_sequence().count_open(&common.lo, &common.hi) >= 1
}

/// Integer order used inside coefficient tuples: 0, 1, −1, 2, −2, …
fn zigzag(c: i64) -> u64 {
    if c > 0 {
        2 * c as u64 - 1
    } else {
        2 * c.unsigned_abs()
    }
}

/// All primitive polynomials of size class `n` (degree + Σ|cᵢ|) with positive
/// leading coefficient, in canonical order: degree ascending, then the
/// coefficient tuple read from the leading term down, each coefficient
/// ordered 0, 1, −1, 2, −2, …
pub fn polynomials_of_class(n: u32) -> Vec<IntPolynomial> {
    let mut out = Vec::new();
    for degree in 1..n {
        let height = (n - degree) as i64;
        let mut tuple = Vec::with_capacity(degree as usize + 1);
        for lead in 1..=height {
            tuple.clear();
            tuple.push(lead);
            fill_tuple(&mut tuple, degree as usize, height - lead, &mut out);
        }
    }
    out
}

fn fill_tuple(tuple: &mut Vec<i64>, degree: usize, remaining: i64, out: &mut Vec<IntPolynomial>) {
    let position = tuple.len(); // coefficients placed so far, leading first
    if position == degree {
        // constant term absorbs the rest
        let candidates: &[i64] = if remaining == 0 { &[0] } else { &[remaining, -remaining] };
        for &c in candidates {
            tuple.push(c);
            let g = tuple.iter().fold(0i64, |g, &x| g.gcd(&x));
            if g == 1 {
                let coeffs: Vec<BigInt> = tuple.iter().rev().map(|&x| BigInt::from(x)).collect();
                out.push(IntPolynomial::from_raw(coeffs));
            }
            tuple.pop();
        }
        return;
    }
    let mut values: Vec<i64> = (-remaining..=remaining).collect();
    values.sort_by_key(|&c| zigzag(c));
    for c in values {
        tuple.push(c);
        fill_tuple(tuple, degree, remaining - c.abs(), out);
        tuple.pop();
    }
}

/// One enumerated algebraic real with the polynomial that first produced it.
#[derive(Clone, Debug)]
pub struct EnumeratedAlgebraic {
    pub value: AlgebraicReal,
    pub source: IntPolynomial,
    pub size_class: u32,
}

const DEDUP_KEY_LOG2: i64 = -40;

struct EnumState {
    found: Vec<EnumeratedAlgebraic>,
    // refined lo -> (refined hi, index into found)
    keys: BTreeMap<Dyadic, Vec<(Dyadic, usize)>>,
    class: u32,
    class_polys: Vec<IntPolynomial>,
    next_poly: usize,
}

/// Memoized canonical enumeration of the distinct algebraic reals strictly
/// inside a window.
pub struct AlgebraicEnumeration {
    window: DyadicInterval,
    state: Mutex<EnumState>,
}

impl AlgebraicEnumeration {
    pub fn new(window: DyadicInterval) -> Self {
        AlgebraicEnumeration {
            window,
            state: Mutex::new(EnumState {
                found: Vec::new(),
                keys: BTreeMap::new(),
                class: 1,
                class_polys: Vec::new(),
                next_poly: 0,
            }),
        }
    }

    /// Process-wide shared enumeration for `window`.
    pub fn shared(window: &DyadicInterval) -> Arc<AlgebraicEnumeration> {
        static REGISTRY: OnceLock<Mutex<HashMap<DyadicInterval, Arc<AlgebraicEnumeration>>>> =
            OnceLock::new();
        let mut reg = REGISTRY.get_or_init(Default::default).lock().expect("registry poisoned");
        reg.entry(window.clone())
            .or_insert_with(|| Arc::new(AlgebraicEnumeration::new(window.clone())))
            .clone()
    }

    pub fn window(&self) -> &DyadicInterval {
        &self.window
    }

    /// The `index`-th (0-based) distinct algebraic real in the window.
    pub fn get(&self, index: usize) -> AlgebraicReal {
        self.entry(index).value
    }

    pub fn entry(&self, index: usize) -> EnumeratedAlgebraic {
        let mut st = self.state.lock().expect("enumeration poisoned");
        while st.found.len() <= index {
            self.step(&mut st);
        }
        st.found[index].clone()
    }

    /// Entries `0..count`.
    pub fn prefix(&self, count: usize) -> Vec<EnumeratedAlgebraic> {
        if count == 0 {
            return Vec::new();
        }
        self.entry(count - 1);
        let st = self.state.lock().expect("enumeration poisoned");
        st.found[..count].to_vec()
    }

    fn step(&self, st: &mut EnumState) {
        if st.next_poly >= st.class_polys.len() {
            st.class += 1;
            st.class_polys = polynomials_of_class(st.class);
            st.next_poly = 0;
            return;
        }
        let poly = st.class_polys[st.next_poly].clone();
        st.next_poly += 1;
        for root in roots_in(&poly, &self.window) {
            let key = refine(&root, DEDUP_KEY_LOG2);
            let (klo, khi) = (key.isolator.lo.clone(), key.isolator.hi.clone());
            let span = Dyadic::pow2(DEDUP_KEY_LOG2);
            let from = &klo - &span;
            let duplicate = st
                .keys
                .range(from..khi.clone())
                .flat_map(|(lo, v)| v.iter().map(move |(hi, i)| (lo, hi, *i)))
                .filter(|(lo, hi, _)| **lo < khi && **hi > klo)
                .any(|(_, _, i)| compare(&st.found[i].value, &root) == Ordering::Equal);
            if duplicate {
                continue;
            }
            let idx = st.found.len();
            st.found.push(EnumeratedAlgebraic { value: root, source: poly.clone(), size_class: st.class });
            st.keys.entry(klo).or_default().push((khi, idx));
        }
    }
}

/// `index`-th distinct algebraic real in `window` under the canonical order.
pub fn enumerate_algebraics(index: usize, window: &DyadicInterval) -> AlgebraicReal {
    AlgebraicEnumeration::shared(window).get(index)
}
