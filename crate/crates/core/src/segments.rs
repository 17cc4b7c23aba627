//! Sequential placement of algebraic numbers on the line, segment creation,
//! segment filling by a named choice policy, and the nested-segment hunt for
//! a target real.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::algebraic::{compare, AlgebraicEnumeration, AlgebraicReal};
use crate::diagonal::diagonalize;
use crate::digits::{bits_to_string, grid_point, prefix_value, reals_differ, DigitStream, Separation};
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::sigma::AlgebraicRows;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("segment endpoints are equal")]
    DegenerateSegment,
    #[error("unknown placement mode `{0}` (expected adjacent or allpairs)")]
    UnknownMode(String),
    #[error("unknown filler policy `{0}` (expected liouville-affine or diagonal-local)")]
    UnknownPolicy(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementMode {
    /// New segments only with the nearest placed neighbors.
    Adjacent,
    /// A new segment with every previously placed number.
    AllPairs,
}

impl FromStr for PlacementMode {
    type Err = SegmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adjacent" => Ok(PlacementMode::Adjacent),
            "allpairs" => Ok(PlacementMode::AllPairs),
            other => Err(SegmentError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for PlacementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlacementMode::Adjacent => "adjacent",
            PlacementMode::AllPairs => "allpairs",
        })
    }
}

/// Deterministic choice function picking one value inside each segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FillerPolicy {
    /// `lo + (hi − lo)·ℓ` with `ℓ` the binary Liouville constant.
    #[serde(rename = "liouville-affine")]
    LiouvilleAffine,
    /// The plain diagonal of the algebraic enumeration, squeezed into a
    /// dyadic cell strictly inside the segment.
    #[serde(rename = "diagonal-local")]
    DiagonalLocal,
}

impl FromStr for FillerPolicy {
    type Err = SegmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "liouville-affine" => Ok(FillerPolicy::LiouvilleAffine),
            "diagonal-local" => Ok(FillerPolicy::DiagonalLocal),
            other => Err(SegmentError::UnknownPolicy(other.to_string())),
        }
    }
}

impl fmt::Display for FillerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FillerPolicy::LiouvilleAffine => "liouville-affine",
            FillerPolicy::DiagonalLocal => "diagonal-local",
        })
    }
}

/// A placed algebraic number with its 0-based enumeration index.
#[derive(Clone, Debug)]
pub struct Placed {
    pub value: AlgebraicReal,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct Segment {
    /// 1-based creation ordinal.
    pub id: usize,
    pub lo: Placed,
    pub hi: Placed,
    pub filler: DigitStream,
    /// Placement step (1-based) that created the segment.
    pub created: usize,
    /// Step at which a later placement split it (adjacent mode only).
    pub retired: Option<usize>,
}

impl Segment {
    pub fn is_active(&self) -> bool {
        self.retired.is_none()
    }
}

/// Evolves only through [`PlacementState::place_next`]; each call returns a
/// new state.
#[derive(Clone)]
pub struct PlacementState {
    window: DyadicInterval,
    enumeration: Arc<AlgebraicEnumeration>,
    mode: PlacementMode,
    policy: FillerPolicy,
    placed: Vec<Placed>,
    segments: Vec<Segment>,
    steps: usize,
}

impl PlacementState {
    pub fn new(window: DyadicInterval, mode: PlacementMode, policy: FillerPolicy) -> Self {
        PlacementState {
            enumeration: AlgebraicEnumeration::shared(&window),
            window,
            mode,
            policy,
            placed: Vec::new(),
            segments: Vec::new(),
            steps: 0,
        }
    }

    pub fn window(&self) -> &DyadicInterval {
        &self.window
    }

    pub fn mode(&self) -> PlacementMode {
        self.mode
    }

    pub fn policy(&self) -> FillerPolicy {
        self.policy
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Placed numbers in ascending order.
    pub fn placed(&self) -> &[Placed] {
        &self.placed
    }

    /// Every segment ever created, in creation order.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn active_segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.is_active())
    }

    pub fn place_next(&self) -> PlacementState {
        let mut next = self.clone();
        next.advance();
        next
    }

    /// Places the next enumerated number in place.
    pub fn advance(&mut self) {
        let index = self.steps;
        self.steps += 1;
        let step = self.steps;
        let value = self.enumeration.get(index);
        let pos = self
            .placed
            .binary_search_by(|p| compare(&p.value, &value))
            .unwrap_or_else(|insert_at| insert_at);
        let new = Placed { value, index };
        let mut pairs: Vec<(Placed, Placed)> = Vec::new();
        match self.mode {
            PlacementMode::Adjacent => {
                let left = pos.checked_sub(1).map(|i| self.placed[i].clone());
                let right = self.placed.get(pos).cloned();
                if let (Some(l), Some(r)) = (&left, &right) {
                    for s in self.segments.iter_mut().filter(|s| s.is_active()) {
                        if s.lo.index == l.index && s.hi.index == r.index {
                            s.retired = Some(step);
                        }
                    }
                }
                if let Some(l) = left {
                    pairs.push((l, new.clone()));
                }
                if let Some(r) = right {
                    pairs.push((new.clone(), r));
                }
            }
            PlacementMode::AllPairs => {
                // pair with earlier placements in placement order
                let mut earlier: Vec<&Placed> = self.placed.iter().collect();
                earlier.sort_by_key(|p| p.index);
                for p in earlier {
                    if compare(&p.value, &new.value) == Ordering::Less {
                        pairs.push((p.clone(), new.clone()));
                    } else {
                        pairs.push((new.clone(), p.clone()));
                    }
                }
            }
        }
        self.placed.insert(pos, new);
        for (lo, hi) in pairs {
            let filler = fill_segment(&lo.value, &hi.value, self.policy, &self.window)
                .expect("enumerated numbers are distinct");
            let id = self.segments.len() + 1;
            self.segments.push(Segment { id, lo, hi, filler, created: step, retired: None });
        }
    }
}

fn unit_diagonal() -> DigitStream {
    static D: OnceLock<DigitStream> = OnceLock::new();
    D.get_or_init(|| diagonalize(AlgebraicRows::unit(), 0)).clone()
}

/// Unit-coordinate position of a dyadic real inside the window when it is a
/// dyadic rational there too.
fn unit_dyadic(x: &Dyadic, window: &DyadicInterval) -> Option<Dyadic> {
    let w = window.width();
    let wlog = w.ceil_log2()?;
    if w != Dyadic::pow2(wlog) {
        return None;
    }
    Some((x - &window.lo).mul_pow2(-wlog))
}

/// A stream whose value lies strictly inside `(lo, hi)` (real coordinates),
/// expanded relative to `window`.
pub fn fill_segment(
    lo: &AlgebraicReal,
    hi: &AlgebraicReal,
    policy: FillerPolicy,
    window: &DyadicInterval,
) -> Result<DigitStream, SegmentError> {
    let (lo, hi) = match compare(lo, hi) {
        Ordering::Equal => return Err(SegmentError::DegenerateSegment),
        Ordering::Less => (lo, hi),
        Ordering::Greater => (hi, lo),
    };
    match policy {
        FillerPolicy::LiouvilleAffine => {
            if let Some(prefix) = dyadic_cell_prefix(lo, hi, window) {
                return Ok(DigitStream::shifted(prefix, DigitStream::liouville()));
            }
            Ok(DigitStream::affine(lo.clone(), hi.clone(), window.clone(), DigitStream::liouville())
                .expect("ordered endpoints"))
        }
        FillerPolicy::DiagonalLocal => {
            let prefix = interior_cell(lo, hi, window);
            Ok(DigitStream::shifted(prefix, unit_diagonal()))
        }
    }
}

/// When the segment is exactly an aligned dyadic cell in unit coordinates,
/// the digits that select it.
fn dyadic_cell_prefix(lo: &AlgebraicReal, hi: &AlgebraicReal, window: &DyadicInterval) -> Option<Vec<u8>> {
    let ulo = unit_dyadic(&lo.as_dyadic()?, window)?;
    let uhi = unit_dyadic(&hi.as_dyadic()?, window)?;
    let width = &uhi - &ulo;
    let log = width.ceil_log2()?;
    if width != Dyadic::pow2(log) || log > 0 || ulo < Dyadic::zero() {
        return None;
    }
    let len = log.unsigned_abs();
    let k = ulo.floor_scaled(len);
    if Dyadic::new(k.clone(), len) != ulo {
        return None;
    }
    Some((0..len).rev().map(|i| u8::from(k.bit(i))).collect())
}

/// Digits of an aligned dyadic cell whose closure lies strictly inside the
/// open segment.
fn interior_cell(lo: &AlgebraicReal, hi: &AlgebraicReal, window: &DyadicInterval) -> Vec<u8> {
    let lo_s = DigitStream::algebraic(lo.clone(), window.clone()).expect("segment endpoints lie in the window");
    let hi_s = DigitStream::algebraic(hi.clone(), window.clone()).expect("segment endpoints lie in the window");
    let mut p = 2u64;
    loop {
        let klo = prefix_value(&lo_s.prefix(p));
        let khi = prefix_value(&hi_s.prefix(p));
        if &khi - &klo >= 3.into() {
            let k = klo + 1u32;
            return (0..p).rev().map(|i| u8::from(k.bit(i))).collect();
        }
        p += 1;
    }
}

/// How a target relates to one segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "relation", content = "precision", rename_all = "snake_case")]
pub enum Containment {
    /// The closed target interval at this precision lies inside the open segment.
    Contains(u64),
    /// The target interval lies outside the open segment.
    Excludes(u64),
    Undecided,
}

/// Decides containment of the target (unit coordinates) in an open segment
/// (real coordinates) using at most `budget` digits.
pub fn containment(
    lo: &AlgebraicReal,
    hi: &AlgebraicReal,
    target: &DigitStream,
    window: &DyadicInterval,
    budget: u64,
) -> Containment {
    let mut lo = lo.clone();
    let mut hi = hi.clone();
    let mut p = 1u64;
    loop {
        let k = prefix_value(&target.prefix(p));
        let t_lo = grid_point(window, &k, p);
        let t_hi = grid_point(window, &(k + 1u32), p);
        if lo.cmp_dyadic(&t_lo) == Ordering::Less && hi.cmp_dyadic(&t_hi) == Ordering::Greater {
            return Containment::Contains(p);
        }
        if lo.cmp_dyadic(&t_hi) != Ordering::Less || hi.cmp_dyadic(&t_lo) != Ordering::Greater {
            return Containment::Excludes(p);
        }
        if p >= budget {
            return Containment::Undecided;
        }
        p = (p * 2).min(budget);
    }
}

/// Relation between a chain segment's filler and the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FillerRelation {
    /// Same source: the filler is the target.
    Identical,
    /// Proved unequal; bounds on `|filler − target|` in unit coordinates.
    ProvedDifferent { precision: u64, lower: Dyadic, upper: Dyadic },
    /// No separation within the budget; `upper` still bounds the distance.
    Unresolved { budget: u64, upper: Dyadic },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "segment", rename_all = "snake_case")]
pub enum HuntVerdict {
    /// The target is the filler of this segment id.
    TargetIsSomeFiller(usize),
    TargetDistinctFromAllFillersSoFar,
    Unresolved,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainLink {
    pub segment: usize,
    pub created: usize,
    /// `[lo, hi]` of the open segment.
    pub endpoints: [AlgebraicReal; 2],
    /// Upper bound on the width in real coordinates.
    pub width_upper: Dyadic,
    pub width_log2: i64,
    pub containment_precision: u64,
    pub filler: Value,
    pub filler_target: FillerRelation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HuntReport {
    pub steps: usize,
    pub mode: PlacementMode,
    pub policy: FillerPolicy,
    pub window: DyadicInterval,
    pub budget: u64,
    pub target: Value,
    pub chain: Vec<ChainLink>,
    /// Segment ids whose containment could not be decided within the budget.
    pub precision_exhausted: Vec<usize>,
    pub segments_created: usize,
    pub verdict: HuntVerdict,
}

#[derive(Clone, Debug)]
pub struct HuntConfig {
    pub window: DyadicInterval,
    pub mode: PlacementMode,
    pub policy: FillerPolicy,
    pub budget: u64,
}

impl Default for HuntConfig {
    fn default() -> Self {
        HuntConfig {
            window: DyadicInterval::unit(),
            mode: PlacementMode::Adjacent,
            policy: FillerPolicy::LiouvilleAffine,
            budget: 64,
        }
    }
}

fn width_bounds(lo: &AlgebraicReal, hi: &AlgebraicReal, window: &DyadicInterval, budget: u64) -> Dyadic {
    let scale = window.width().ceil_log2().unwrap_or(0);
    let target = scale - budget as i64;
    let lo = crate::algebraic::refine(lo, target);
    let hi = crate::algebraic::refine(hi, target);
    &hi.isolator().hi - &lo.isolator().lo
}

fn filler_relation(filler: &DigitStream, target: &DigitStream, budget: u64) -> FillerRelation {
    if filler.identical_to(target) {
        return FillerRelation::Identical;
    }
    let distance = |p: u64| {
        let kf = prefix_value(&filler.prefix(p));
        let kt = prefix_value(&target.prefix(p));
        let gap = (kf - kt).magnitude().clone();
        let upper = Dyadic::new(num_bigint::BigInt::from(gap.clone()) + 1, p);
        let lower = if gap >= 1u32.into() {
            Dyadic::new(num_bigint::BigInt::from(gap) - 1, p)
        } else {
            Dyadic::zero()
        };
        (lower, upper)
    };
    match reals_differ(filler, target, budget) {
        Separation::ProvedDifferent(p) => {
            let (lower, upper) = distance(p);
            FillerRelation::ProvedDifferent { precision: p, lower, upper }
        }
        Separation::Unresolved => FillerRelation::Unresolved { budget, upper: distance(budget).1 },
    }
}

/// Runs `steps` placements and reports the greedy chain of nested segments
/// that provably contain the target. The report records evidence only.
pub fn hunt_target(target: &DigitStream, steps: usize, config: &HuntConfig) -> HuntReport {
    let mut state = PlacementState::new(config.window.clone(), config.mode, config.policy);
    for _ in 0..steps {
        state.advance();
    }
    hunt_in_state(target, &state, config.budget)
}

/// Hunt over an already built placement state.
pub fn hunt_in_state(target: &DigitStream, state: &PlacementState, budget: u64) -> HuntReport {
    let window = state.window().clone();
    let mut chain: Vec<(usize, u64)> = Vec::new(); // (segment position, containment precision)
    let mut exhausted = Vec::new();
    for (pos, seg) in state.segments().iter().enumerate() {
        match containment(&seg.lo.value, &seg.hi.value, target, &window, budget) {
            Containment::Contains(p) => {
                let nested = match chain.last() {
                    None => true,
                    Some(&(last, _)) => {
                        let outer = &state.segments()[last];
                        let lo_ok = compare(&outer.lo.value, &seg.lo.value) != Ordering::Greater;
                        let hi_ok = compare(&seg.hi.value, &outer.hi.value) != Ordering::Greater;
                        let strict = outer.lo.index != seg.lo.index || outer.hi.index != seg.hi.index;
                        lo_ok && hi_ok && strict
                    }
                };
                if nested {
                    chain.push((pos, p));
                }
            }
            Containment::Excludes(_) => {}
            Containment::Undecided => exhausted.push(seg.id),
        }
    }
    let links: Vec<ChainLink> = chain
        .iter()
        .map(|&(pos, p)| {
            let seg = &state.segments()[pos];
            let width_upper = width_bounds(&seg.lo.value, &seg.hi.value, &window, budget);
            ChainLink {
                segment: seg.id,
                created: seg.created,
                endpoints: [seg.lo.value.clone(), seg.hi.value.clone()],
                width_log2: width_upper.ceil_log2().unwrap_or(i64::MIN),
                width_upper,
                containment_precision: p,
                filler: seg.filler.describe(),
                filler_target: filler_relation(&seg.filler, target, budget),
            }
        })
        .collect();
    let verdict = if let Some(seg) = state.segments().iter().find(|s| s.filler.identical_to(target)) {
        HuntVerdict::TargetIsSomeFiller(seg.id)
    } else if state
        .segments()
        .iter()
        .all(|s| reals_differ(&s.filler, target, budget).is_proved())
    {
        HuntVerdict::TargetDistinctFromAllFillersSoFar
    } else {
        HuntVerdict::Unresolved
    };
    HuntReport {
        steps: state.steps(),
        mode: state.mode(),
        policy: state.policy(),
        window,
        budget,
        target: target.describe(),
        chain: links,
        precision_exhausted: exhausted,
        segments_created: state.segments().len(),
        verdict,
    }
}

/// Digits of a stream rendered for reports.
pub fn digits_of(s: &DigitStream, n: u64) -> String {
    bits_to_string(&s.prefix(n))
}
