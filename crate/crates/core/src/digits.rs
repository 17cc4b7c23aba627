//! Lazy, memoized binary expansions of reals in `[0, 1)`.
//!
//! Every stream is a shareable handle onto one source and one monotone
//! prefix cache. Positions are 1-based: digit `n` has weight `2^−n`. Streams
//! whose value comes from a real number (algebraic, constant, affine) are
//! expanded relative to a window `(M, W)`: the digits are those of
//! `(x − M) / (W − M)`, computed by exact comparison against the dyadic grid
//! points `M + (W − M)·k/2^n`, so the expansion of a grid point terminates.

use std::cmp::Ordering;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebraic::AlgebraicReal;
use crate::dyadic::{Dyadic, DyadicInterval};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("value {value} lies outside the window {window}")]
    OutsideWindow { value: String, window: String },
    #[error("constant {0} is outside [0, 1)")]
    ConstantOutOfRange(String),
    #[error("segment endpoints must satisfy lo < hi")]
    EmptyAffineRange,
}

/// An indexed sequence of streams, 1-based. Implementations must return the
/// same handle for repeated queries so digit caches are shared.
pub trait StreamSequence: Send + Sync {
    fn get(&self, index: u64) -> DigitStream;
    fn describe(&self) -> Value;
}

/// Counts digits produced by algebraic-sourced streams.
#[derive(Debug, Default)]
pub struct DigitCounter(AtomicU64);

impl DigitCounter {
    pub fn get(&self) -> u64 {
        self.0.load(AtomicOrdering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, AtomicOrdering::Relaxed);
    }
}

enum Source {
    Algebraic { origin: AlgebraicReal, window: DyadicInterval, counter: Option<Arc<DigitCounter>> },
    Constant(Dyadic),
    Liouville,
    Pattern { prefix: Vec<u8>, fill: u8 },
    Diagonal { rows: Arc<dyn StreamSequence>, offset: u64 },
    Shifted { prefix: Vec<u8>, tail: DigitStream },
    Affine { lo: AlgebraicReal, hi: AlgebraicReal, window: DyadicInterval, inner: DigitStream },
}

enum Work {
    Idle,
    Algebraic { value: AlgebraicReal, cell: BigInt },
    Affine { lo: AlgebraicReal, hi: AlgebraicReal, cell: BigInt },
}

struct State {
    bits: Vec<u8>,
    work: Work,
}

struct StreamCore {
    source: Source,
    state: Mutex<State>,
}

/// Shareable handle; clones share the digit cache.
#[derive(Clone)]
pub struct DigitStream(Arc<StreamCore>);

/// Outcome of a bounded attempt to separate two reals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "position")]
pub enum Separation {
    ProvedDifferent(u64),
    Unresolved,
}

impl Separation {
    pub fn is_proved(&self) -> bool {
        matches!(self, Separation::ProvedDifferent(_))
    }
}

/// Exported digit prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitRecord {
    pub source: Value,
    pub precision: u64,
    pub digits: String,
}

const AFFINE_PRECISION_CAP: u64 = 1 << 20;

impl DigitStream {
    fn from_source(source: Source, work: Work) -> Self {
        DigitStream(Arc::new(StreamCore { source, state: Mutex::new(State { bits: Vec::new(), work }) }))
    }

    /// Expansion of an algebraic real relative to `window`; the value must
    /// lie in `[M, W)`.
    pub fn algebraic(value: AlgebraicReal, window: DyadicInterval) -> Result<Self, StreamError> {
        Self::algebraic_counted(value, window, None)
    }

    pub fn algebraic_counted(
        value: AlgebraicReal,
        window: DyadicInterval,
        counter: Option<Arc<DigitCounter>>,
    ) -> Result<Self, StreamError> {
        let mut probe = value.clone();
        let inside = probe.cmp_dyadic(&window.lo) != Ordering::Less
            && probe.cmp_dyadic(&window.hi) == Ordering::Less;
        if !inside {
            return Err(StreamError::OutsideWindow {
                value: format!("{value:?}"),
                window: window.to_string(),
            });
        }
        let work = Work::Algebraic { value: probe, cell: BigInt::zero() };
        Ok(Self::from_source(Source::Algebraic { origin: value, window, counter }, work))
    }

    /// A dyadic constant in `[0, 1)`, canonical terminating expansion.
    pub fn constant(value: Dyadic) -> Result<Self, StreamError> {
        if value < Dyadic::zero() || value >= Dyadic::one() {
            return Err(StreamError::ConstantOutOfRange(value.to_string()));
        }
        Ok(Self::from_source(Source::Constant(value), Work::Idle))
    }

    /// Binary Liouville constant: digit `n` is 1 iff `n = k!` for some `k ≥ 1`.
    pub fn liouville() -> Self {
        Self::from_source(Source::Liouville, Work::Idle)
    }

    /// Literal digits followed by an endless run of `fill`.
    pub fn pattern(prefix: Vec<u8>, fill: u8) -> Self {
        debug_assert!(prefix.iter().all(|&b| b <= 1) && fill <= 1);
        Self::from_source(Source::Pattern { prefix, fill }, Work::Idle)
    }

    pub fn zeros() -> Self {
        Self::pattern(Vec::new(), 0)
    }

    pub fn ones() -> Self {
        Self::pattern(Vec::new(), 1)
    }

    /// Output digit `ν` is `1 − rows[ν].digit_at(ν + offset)`.
    pub fn diagonal(rows: Arc<dyn StreamSequence>, offset: u64) -> Self {
        Self::from_source(Source::Diagonal { rows, offset }, Work::Idle)
    }

    /// `prefix` followed by every digit of `tail`, i.e. `(c + tail) / 2^len`.
    pub fn shifted(prefix: Vec<u8>, tail: DigitStream) -> Self {
        Self::from_source(Source::Shifted { prefix, tail }, Work::Idle)
    }

    /// The real `lo + (hi − lo)·inner` expanded relative to `window`. The value
    /// must not be a dyadic grid point, which holds whenever `inner` is
    /// irrational and `lo`, `hi` are rational.
    pub fn affine(
        lo: AlgebraicReal,
        hi: AlgebraicReal,
        window: DyadicInterval,
        inner: DigitStream,
    ) -> Result<Self, StreamError> {
        if crate::algebraic::compare(&lo, &hi) != Ordering::Less {
            return Err(StreamError::EmptyAffineRange);
        }
        let work = Work::Affine { lo: lo.clone(), hi: hi.clone(), cell: BigInt::zero() };
        Ok(Self::from_source(Source::Affine { lo, hi, window, inner }, work))
    }

    /// Digit at `position ≥ 1`.
    ///
    /// Panics on position 0.
    pub fn digit_at(&self, position: u64) -> u8 {
        assert!(position >= 1, "digit positions start at 1");
        let idx = (position - 1) as usize;
        let mut st = self.0.state.lock().expect("digit cache poisoned");
        if idx >= st.bits.len() {
            self.extend(&mut st, position);
        }
        st.bits[idx]
    }

    /// First `len` digits.
    pub fn prefix(&self, len: u64) -> Vec<u8> {
        if len == 0 {
            return Vec::new();
        }
        self.digit_at(len);
        let st = self.0.state.lock().expect("digit cache poisoned");
        st.bits[..len as usize].to_vec()
    }

    pub fn prefix_string(&self, len: u64) -> String {
        bits_to_string(&self.prefix(len))
    }

    /// Number of digits currently cached.
    pub fn cached_len(&self) -> usize {
        self.0.state.lock().expect("digit cache poisoned").bits.len()
    }

    /// Closed interval `[k/2^p, (k+1)/2^p]` fixed by the first `precision` digits.
    pub fn to_interval(&self, precision: u64) -> DyadicInterval {
        interval_of_prefix(&self.prefix(precision))
    }

    pub fn describe(&self) -> Value {
        match &self.0.source {
            Source::Algebraic { origin, window, .. } => json!({
                "kind": "algebraic",
                "poly": origin.poly(),
                "isolator": origin.isolator(),
                "window": window,
            }),
            Source::Constant(c) => json!({ "kind": "constant", "value": c }),
            Source::Liouville => json!({ "kind": "oracle", "rule": "liouville" }),
            Source::Pattern { prefix, fill } => {
                json!({ "kind": "pattern", "prefix": bits_to_string(prefix), "fill": fill })
            }
            Source::Diagonal { rows, offset } => {
                json!({ "kind": "diagonal", "offset": offset, "rows": rows.describe() })
            }
            Source::Shifted { prefix, tail } => {
                json!({ "kind": "shifted", "prefix": bits_to_string(prefix), "tail": tail.describe() })
            }
            Source::Affine { lo, hi, window, inner } => json!({
                "kind": "affine",
                "lo": lo,
                "hi": hi,
                "window": window,
                "inner": inner.describe(),
            }),
        }
    }

    /// The exact value when the source is an algebraic or dyadic constant,
    /// mapped back to real coordinates of the given window.
    pub fn algebraic_value(&self) -> Option<(AlgebraicReal, DyadicInterval)> {
        match &self.0.source {
            Source::Algebraic { origin, window, .. } => Some((origin.clone(), window.clone())),
            Source::Constant(c) => Some((AlgebraicReal::from_dyadic(c), DyadicInterval::unit())),
            _ => None,
        }
    }

    pub fn same_handle(&self, other: &DigitStream) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Structural identity: same handle or identical source descriptors.
    /// Identical descriptors denote the same real.
    pub fn identical_to(&self, other: &DigitStream) -> bool {
        self.same_handle(other) || self.describe() == other.describe()
    }

    pub fn export(&self, precision: u64) -> DigitRecord {
        DigitRecord { source: self.describe(), precision, digits: self.prefix_string(precision) }
    }

    fn extend(&self, st: &mut State, upto: u64) {
        let have = st.bits.len() as u64;
        match &self.0.source {
            Source::Constant(c) => {
                for n in have + 1..=upto {
                    st.bits.push(u8::from(c.floor_scaled(n).is_odd()));
                }
            }
            Source::Liouville => {
                for n in have + 1..=upto {
                    st.bits.push(u8::from(is_factorial(n)));
                }
            }
            Source::Pattern { prefix, fill } => {
                for n in have + 1..=upto {
                    st.bits.push(prefix.get((n - 1) as usize).copied().unwrap_or(*fill));
                }
            }
            Source::Diagonal { rows, offset } => {
                for nu in have + 1..=upto {
                    st.bits.push(1 - rows.get(nu).digit_at(nu + offset));
                }
            }
            Source::Shifted { prefix, tail } => {
                let k = prefix.len() as u64;
                for n in have + 1..=upto {
                    let bit = if n <= k { prefix[(n - 1) as usize] } else { tail.digit_at(n - k) };
                    st.bits.push(bit);
                }
            }
            Source::Algebraic { window, counter, .. } => {
                let Work::Algebraic { value, cell } = &mut st.work else {
                    unreachable!("algebraic stream without refinement state")
                };
                let mut new_bits = Vec::with_capacity((upto - have) as usize);
                for n in have + 1..=upto {
                    let next = &*cell << 1usize;
                    let mid = grid_point(window, &(&next + 1u32), n);
                    let bit = value.cmp_dyadic(&mid) != Ordering::Less;
                    *cell = if bit { next + 1u32 } else { next };
                    new_bits.push(u8::from(bit));
                    if let Some(c) = counter {
                        c.bump();
                    }
                }
                st.bits.extend(new_bits);
            }
            Source::Affine { window, inner, .. } => {
                let Work::Affine { lo, hi, cell } = &mut st.work else {
                    unreachable!("affine stream without refinement state")
                };
                let scale_log2 = window.width().ceil_log2().unwrap_or(0);
                let mut new_bits = Vec::with_capacity((upto - have) as usize);
                for n in have + 1..=upto {
                    let next = &*cell << 1usize;
                    let mid = grid_point(window, &(&next + 1u32), n);
                    let bit = affine_at_least(lo, hi, inner, &mid, n, scale_log2);
                    *cell = if bit { next + 1u32 } else { next };
                    new_bits.push(u8::from(bit));
                }
                st.bits.extend(new_bits);
            }
        }
    }
}

/// Decides `lo + (hi − lo)·s ≥ g` with growing precision.
fn affine_at_least(
    lo: &mut AlgebraicReal,
    hi: &mut AlgebraicReal,
    inner: &DigitStream,
    g: &Dyadic,
    position: u64,
    scale_log2: i64,
) -> bool {
    let mut q = position + 16;
    loop {
        lo.refine_to(scale_log2 - q as i64);
        hi.refine_to(scale_log2 - q as i64);
        let a = DyadicInterval { lo: lo.isolator().lo.clone(), hi: lo.isolator().hi.clone() };
        let b = DyadicInterval { lo: hi.isolator().lo.clone(), hi: hi.isolator().hi.clone() };
        let s = inner.to_interval(q);
        let v = a.add(&b.sub(&a).mul(&s));
        if v.lo >= *g {
            return true;
        }
        if v.hi < *g {
            return false;
        }
        assert!(q < AFFINE_PRECISION_CAP, "affine stream value coincides with a grid point");
        q += q / 2;
    }
}

/// `M + (W − M)·k / 2^n`.
pub fn grid_point(window: &DyadicInterval, k: &BigInt, n: u64) -> Dyadic {
    &window.lo + &(&window.width() * &Dyadic::new(k.clone(), n))
}

fn is_factorial(n: u64) -> bool {
    let mut f = 1u64;
    let mut k = 1u64;
    while f < n {
        k += 1;
        f = match f.checked_mul(k) {
            Some(v) => v,
            None => return false,
        };
    }
    f == n
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

/// Parses a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Option<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}

/// `k` such that the prefix reads `k / 2^len`.
pub fn prefix_value(bits: &[u8]) -> BigInt {
    bits.iter().fold(BigInt::zero(), |acc, &b| (acc << 1usize) + BigInt::from(b))
}

pub fn interval_of_prefix(bits: &[u8]) -> DyadicInterval {
    let p = bits.len() as u64;
    let k = prefix_value(bits);
    DyadicInterval { lo: Dyadic::new(k.clone(), p), hi: Dyadic::new(k + BigInt::one(), p) }
}

/// Searches `p ≤ budget` for disjoint width-`2^−p` prefix intervals.
pub fn reals_differ(s: &DigitStream, t: &DigitStream, budget: u64) -> Separation {
    let mut len = budget.min(32);
    loop {
        let outcome = separate_prefixes(&s.prefix(len), &t.prefix(len));
        if outcome.is_proved() || len == budget {
            return outcome;
        }
        len = (len * 4).min(budget);
    }
}

/// Pure form of [`reals_differ`] over stored prefixes; used by certificate checks.
pub fn separate_prefixes(s: &[u8], t: &[u8]) -> Separation {
    let mut diff: i64 = 0;
    for (p, (&a, &b)) in s.iter().zip(t).enumerate() {
        diff = 2 * diff + i64::from(a) - i64::from(b);
        if diff.abs() >= 2 {
            return Separation::ProvedDifferent(p as u64 + 1);
        }
    }
    Separation::Unresolved
}

impl fmt::Debug for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DigitStream({})", self.describe())
    }
}

/// Every index resolves to the same stream.
pub struct RepeatSequence(pub DigitStream);

impl StreamSequence for RepeatSequence {
    fn get(&self, _index: u64) -> DigitStream {
        self.0.clone()
    }

    fn describe(&self) -> Value {
        json!({ "kind": "repeat", "element": self.0.describe() })
    }
}

/// Explicit streams for the first indices, then a fallback stream.
pub struct ListSequence {
    items: Vec<DigitStream>,
    rest: DigitStream,
}

impl ListSequence {
    pub fn new(items: Vec<DigitStream>, rest: DigitStream) -> Self {
        ListSequence { items, rest }
    }
}

impl StreamSequence for ListSequence {
    fn get(&self, index: u64) -> DigitStream {
        self.items.get((index - 1) as usize).cloned().unwrap_or_else(|| self.rest.clone())
    }

    fn describe(&self) -> Value {
        json!({
            "kind": "list",
            "items": self.items.iter().map(DigitStream::describe).collect::<Vec<_>>(),
            "rest": self.rest.describe(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::IntPolynomial;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn sqrt2_minus_1() -> DigitStream {
        // x^2 + 2x - 1 has root √2 − 1 in (0, 1)
        let a = AlgebraicReal::new(IntPolynomial::new([-1, 2, 1]), DyadicInterval::unit()).unwrap();
        DigitStream::algebraic(a, DyadicInterval::unit()).unwrap()
    }

    /// Independent oracle: repeated doubling of an f64 approximation.
    fn doubling_digits(mut x: f64, n: usize) -> Vec<u8> {
        (0..n)
            .map(|_| {
                x *= 2.0;
                let b = x >= 1.0;
                if b {
                    x -= 1.0;
                }
                u8::from(b)
            })
            .collect()
    }

    #[test]
    fn constant_half_terminates() {
        let s = DigitStream::constant(d("1/2")).unwrap();
        assert_eq!(s.prefix_string(8), "10000000");
        assert_eq!(s.to_interval(3), DyadicInterval::new(d("4/8"), d("5/8")).unwrap());
        let z = DigitStream::constant(Dyadic::zero()).unwrap();
        assert_eq!(z.to_interval(5), DyadicInterval::new(d("0"), d("1/32")).unwrap());
        assert!(DigitStream::constant(Dyadic::one()).is_err());
    }

    #[test]
    fn sqrt2_minus_one_digits() {
        let s = sqrt2_minus_1();
        assert_eq!(s.prefix(5), vec![0, 1, 1, 0, 1]);
        let oracle = doubling_digits(std::f64::consts::SQRT_2 - 1.0, 40);
        assert_eq!(s.prefix(40), oracle);
    }

    #[test]
    fn liouville_digits() {
        let s = DigitStream::liouville();
        for n in 1..=24 {
            let expected = u8::from([1, 2, 6, 24].contains(&n));
            assert_eq!(s.digit_at(n), expected, "position {n}");
        }
        assert_eq!(s.digit_at(120), 1);
        assert_eq!(s.digit_at(121), 0);
        assert_eq!(s.to_interval(2), DyadicInterval::new(d("3/4"), d("1")).unwrap());
    }

    #[test]
    fn reals_differ_examples() {
        let quarter = DigitStream::constant(d("1/4")).unwrap();
        let half = DigitStream::constant(d("1/2")).unwrap();
        match reals_differ(&quarter, &half, 8) {
            Separation::ProvedDifferent(p) => assert!(p <= 3),
            Separation::Unresolved => panic!("1/4 and 1/2 must separate"),
        }
        let twin = DigitStream::pattern(vec![0], 1);
        for budget in [1, 8, 64, 512] {
            assert_eq!(reals_differ(&half, &twin, budget), Separation::Unresolved);
        }
        match reals_differ(&sqrt2_minus_1(), &DigitStream::liouville(), 16) {
            Separation::ProvedDifferent(p) => assert!(p <= 2),
            Separation::Unresolved => panic!(),
        }
    }

    #[test]
    fn dyadic_algebraic_uses_terminating_expansion() {
        // root 3/8 of 8x - 3
        let a = AlgebraicReal::from_dyadic(&d("3/8"));
        let s = DigitStream::algebraic(a, DyadicInterval::unit()).unwrap();
        assert_eq!(s.prefix_string(10), "0110000000");
    }

    #[test]
    fn window_mapping_for_algebraic_values() {
        // √2 in window (1, 2) has the digits of √2 − 1
        let a = AlgebraicReal::new(IntPolynomial::new([-2, 0, 1]), DyadicInterval::from_ints(1, 2)).unwrap();
        let s = DigitStream::algebraic(a.clone(), DyadicInterval::from_ints(1, 2)).unwrap();
        assert_eq!(s.prefix(30), sqrt2_minus_1().prefix(30));
        // window (0, 3): digits of √2 / 3
        let s = DigitStream::algebraic(a.clone(), DyadicInterval::from_ints(0, 3)).unwrap();
        assert_eq!(s.prefix(40), doubling_digits(std::f64::consts::SQRT_2 / 3.0, 40));
        assert!(DigitStream::algebraic(a, DyadicInterval::from_ints(2, 3)).is_err());
    }

    #[test]
    fn affine_liouville_halved() {
        let lo = AlgebraicReal::from_dyadic(&Dyadic::zero());
        let hi = AlgebraicReal::from_dyadic(&d("1/2"));
        let s = DigitStream::affine(lo, hi, DyadicInterval::unit(), DigitStream::liouville()).unwrap();
        let l = DigitStream::liouville().prefix(60);
        let mut shifted = vec![0];
        shifted.extend_from_slice(&l[..59]);
        assert_eq!(s.prefix(60), shifted);
    }

    #[test]
    fn diagonal_of_constant_rows() {
        let zeros: Arc<dyn StreamSequence> = Arc::new(RepeatSequence(DigitStream::zeros()));
        assert_eq!(DigitStream::diagonal(zeros, 0).prefix_string(6), "111111");
        let ones: Arc<dyn StreamSequence> = Arc::new(RepeatSequence(DigitStream::ones()));
        assert_eq!(DigitStream::diagonal(ones, 3).prefix_string(6), "000000");
    }

    #[test]
    fn concurrent_queries_agree() {
        let s = sqrt2_minus_1();
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let s = s.clone();
                std::thread::spawn(move || s.prefix(100 + 10 * i))
            })
            .collect();
        let results: Vec<Vec<u8>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for r in &results {
            assert_eq!(&r[..100], &results[0][..100]);
        }
    }

    #[test]
    fn counter_tracks_algebraic_digits() {
        let counter = Arc::new(DigitCounter::default());
        let a = AlgebraicReal::from_dyadic(&d("5/16"));
        let s = DigitStream::algebraic_counted(a, DyadicInterval::unit(), Some(counter.clone())).unwrap();
        s.prefix(10);
        s.prefix(10);
        assert_eq!(counter.get(), 10);
    }
}
