//! Certificates for finitely checkable claims, and their independent
//! re-validation from witness data alone.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algebraic::{compare, polynomials_of_class, AlgebraicReal};
use crate::digits::{
    bits_to_string, grid_point, parse_bits, prefix_value, reals_differ, separate_prefixes, DigitStream, Separation,
    StreamSequence,
};
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::poly::IntPolynomial;
use crate::segments::{HuntReport, PlacementState};

pub const SCHEMA: &str = "cantor-certificate/1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("unsupported schema `{0}`")]
    Schema(String),
    #[error("seal mismatch")]
    Seal,
    #[error("malformed witness: {0}")]
    Malformed(String),
    #[error("witness entry {entry}: {reason}")]
    Entry { entry: usize, reason: String },
    #[error("stated outcome {stated} disagrees with witness ({actual})")]
    Outcome { stated: String, actual: String },
}

fn entry_err(entry: usize, reason: impl Into<String>) -> CheckError {
    CheckError::Entry { entry, reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// Every checked item holds.
    Success { checked: u64 },
    /// The claim fails on `violations` items, listed in the witness.
    Failure { violations: u64 },
    /// Bounded search: some items proved, others unresolved within budget.
    Tally { proved: u64, unresolved: u64 },
}

impl Outcome {
    fn tally(proved: u64, unresolved: u64) -> Outcome {
        if unresolved == 0 {
            Outcome::Success { checked: proved }
        } else {
            Outcome::Tally { proved, unresolved }
        }
    }
}

/// Digit-level difference at one row of a diagonal: output digit `row`
/// against digit `position = row + offset` of that row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitWitness {
    pub row: u64,
    pub position: u64,
    pub output_bit: u8,
    pub row_bit: u8,
}

/// Two stored prefixes and the separation they exhibit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealEntry {
    pub label: String,
    pub left: String,
    pub right: String,
    pub outcome: Separation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitDifferenceWitness {
    pub offset: u64,
    pub count: u64,
    /// Output digits `1 ..= count`.
    pub output_prefix: String,
    pub digits: Vec<DigitWitness>,
    /// Real-difference entries between the output and each row.
    pub real: Vec<RealEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealDifferenceWitness {
    pub entries: Vec<RealEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonAlgebraicWitness {
    pub height: u64,
    pub degree: u64,
    pub precision: u64,
    pub window: DyadicInterval,
    pub prefix: String,
    /// The closed interval `I` in window coordinates.
    pub interval: DyadicInterval,
    pub polynomials_checked: u64,
    /// Polynomials `P` with `0 ∈ P(I)`, in canonical order.
    pub violating: Vec<IntPolynomial>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainWitness {
    pub segment: usize,
    pub lo: AlgebraicReal,
    pub hi: AlgebraicReal,
    /// Target digits used for containment.
    pub precision: u64,
    /// `hi.isolator.hi − lo.isolator.lo`.
    pub width_upper: Dyadic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedChainWitness {
    pub window: DyadicInterval,
    pub target_prefix: String,
    pub links: Vec<ChainWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: u64,
    pub j: u64,
    pub outcome: Separation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionScanWitness {
    pub count: u64,
    /// Prefix of element `i` at position `i − 1`.
    pub prefixes: Vec<String>,
    pub pairs: Vec<PairEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "witness", rename_all = "snake_case")]
pub enum Claim {
    DigitDifference(DigitDifferenceWitness),
    RealDifference(RealDifferenceWitness),
    NonAlgebraicUpTo(NonAlgebraicWitness),
    NestedChain(NestedChainWitness),
    CollisionScan(CollisionScanWitness),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    #[serde(flatten)]
    pub claim: Claim,
    pub subjects: Value,
    pub budget: u64,
    pub outcome: Outcome,
    /// SHA-256 over the JSON encoding of every other field.
    pub seal: String,
}

#[derive(Serialize)]
struct Unsealed<'a> {
    schema: &'a str,
    #[serde(flatten)]
    claim: &'a Claim,
    subjects: &'a Value,
    budget: u64,
    outcome: &'a Outcome,
}

impl Certificate {
    fn sealed(claim: Claim, subjects: Value, budget: u64, outcome: Outcome) -> Certificate {
        let mut c = Certificate { schema: SCHEMA.to_string(), claim, subjects, budget, outcome, seal: String::new() };
        c.seal = c.compute_seal();
        c
    }

    pub fn compute_seal(&self) -> String {
        let body = Unsealed {
            schema: &self.schema,
            claim: &self.claim,
            subjects: &self.subjects,
            budget: self.budget,
            outcome: &self.outcome,
        };
        let bytes = serde_json::to_vec(&body).expect("certificate serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn reseal(&mut self) {
        self.seal = self.compute_seal();
    }

    pub fn kind(&self) -> &'static str {
        match self.claim {
            Claim::DigitDifference(_) => "digit_difference",
            Claim::RealDifference(_) => "real_difference",
            Claim::NonAlgebraicUpTo(_) => "non_algebraic_up_to",
            Claim::NestedChain(_) => "nested_chain",
            Claim::CollisionScan(_) => "collision_scan",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

fn bits(s: &str, what: &str) -> Result<Vec<u8>, CheckError> {
    parse_bits(s).ok_or_else(|| CheckError::Malformed(format!("{what} is not a bit string")))
}

fn real_entry(label: String, a: &DigitStream, b: &DigitStream, budget: u64) -> RealEntry {
    let outcome = reals_differ(a, b, budget);
    let len = match outcome {
        Separation::ProvedDifferent(p) => p,
        Separation::Unresolved => budget,
    };
    RealEntry { label, left: bits_to_string(&a.prefix(len)), right: bits_to_string(&b.prefix(len)), outcome }
}

fn check_real_entry(i: usize, e: &RealEntry, budget: u64) -> Result<(Vec<u8>, Vec<u8>), CheckError> {
    let left = bits(&e.left, "left prefix")?;
    let right = bits(&e.right, "right prefix")?;
    let expected_len = match e.outcome {
        Separation::ProvedDifferent(p) => p,
        Separation::Unresolved => budget,
    };
    if left.len() as u64 != expected_len || right.len() as u64 != expected_len {
        return Err(entry_err(i, format!("prefixes must have length {expected_len}")));
    }
    if separate_prefixes(&left, &right) != e.outcome {
        return Err(entry_err(i, "prefixes do not exhibit the stated separation"));
    }
    Ok((left, right))
}

fn real_tally(entries: &[RealEntry]) -> (u64, u64) {
    let proved = entries.iter().filter(|e| e.outcome.is_proved()).count() as u64;
    (proved, entries.len() as u64 - proved)
}

/// Digit witnesses `output[ν] ≠ source[ν][ν + offset]` for
/// `ν = 1 ..= count`, plus real-difference outcomes at `budget`.
pub fn certify_diagonal(
    output: &DigitStream,
    source: &dyn StreamSequence,
    offset: u64,
    count: u64,
    budget: u64,
) -> Certificate {
    assert!(count >= 1, "count must be at least 1");
    let rows: Vec<DigitStream> = (1..=count).map(|nu| source.get(nu)).collect();
    let output_prefix = output.prefix(count);
    let digits = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let nu = i as u64 + 1;
            let position = nu + offset;
            DigitWitness { row: nu, position, output_bit: output_prefix[i], row_bit: row.digit_at(position) }
        })
        .collect();
    let real: Vec<RealEntry> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| real_entry(format!("row {}", i + 1), output, row, budget))
        .collect();
    let (proved, unresolved) = real_tally(&real);
    let witness = DigitDifferenceWitness { offset, count, output_prefix: bits_to_string(&output_prefix), digits, real };
    Certificate::sealed(
        Claim::DigitDifference(witness),
        json!({ "output": output.describe(), "source": source.describe() }),
        budget,
        Outcome::tally(proved, unresolved),
    )
}

/// Bounded separation of each listed pair.
pub fn certify_real_difference(pairs: &[(DigitStream, DigitStream)], budget: u64) -> Certificate {
    let entries: Vec<RealEntry> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| real_entry(format!("pair {}", i + 1), a, b, budget))
        .collect();
    let (proved, unresolved) = real_tally(&entries);
    let subjects: Vec<Value> = pairs.iter().map(|(a, b)| json!([a.describe(), b.describe()])).collect();
    Certificate::sealed(
        Claim::RealDifference(RealDifferenceWitness { entries }),
        Value::Array(subjects),
        budget,
        Outcome::tally(proved, unresolved),
    )
}

/// Primitive polynomials with positive leading coefficient, degree in
/// `1 ..= degree` and coefficient sum `Σ|cᵢ| ≤ height`, in canonical order.
pub fn bounded_polynomials(height: u64, degree: u64) -> Vec<IntPolynomial> {
    (2..=(height + degree) as u32)
        .flat_map(polynomials_of_class)
        .filter(|p| p.degree().is_some_and(|d| d as u64 <= degree) && p.height() <= height.into())
        .collect()
}

fn violating(polys: &[IntPolynomial], interval: &DyadicInterval) -> Vec<IntPolynomial> {
    let zero = Dyadic::zero();
    let hits: Vec<bool> = polys
        .par_iter()
        .map(|p| {
            let v = p.eval_interval(interval);
            v.lo <= zero && zero <= v.hi
        })
        .collect();
    polys.iter().zip(hits).filter(|(_, h)| *h).map(|(p, _)| p.clone()).collect()
}

/// Closed interval of window values whose unit-coordinate expansion starts
/// with `prefix`.
fn window_interval(window: &DyadicInterval, prefix: &[u8]) -> DyadicInterval {
    let p = prefix.len() as u64;
    let k = prefix_value(prefix);
    DyadicInterval { lo: grid_point(window, &k, p), hi: grid_point(window, &(k + 1u32), p) }
}

/// Proves no algebraic number of degree `≤ degree` and height `≤ height`
/// lies in the closed precision-`p` interval of `s`, or lists the
/// polynomials that might vanish there.
pub fn certify_nonalgebraic(
    s: &DigitStream,
    window: &DyadicInterval,
    height: u64,
    degree: u64,
    precision: u64,
) -> Certificate {
    assert!(height >= 1 && degree >= 1 && precision >= 8, "need H ≥ 1, d ≥ 1, p ≥ 8");
    let prefix = s.prefix(precision);
    let interval = window_interval(window, &prefix);
    let polys = bounded_polynomials(height, degree);
    let bad = violating(&polys, &interval);
    let outcome = if bad.is_empty() {
        Outcome::Success { checked: polys.len() as u64 }
    } else {
        Outcome::Failure { violations: bad.len() as u64 }
    };
    let witness = NonAlgebraicWitness {
        height,
        degree,
        precision,
        window: window.clone(),
        prefix: bits_to_string(&prefix),
        interval,
        polynomials_checked: polys.len() as u64,
        violating: bad,
    };
    Certificate::sealed(Claim::NonAlgebraicUpTo(witness), json!({ "stream": s.describe() }), precision, outcome)
}

/// Containment and nesting evidence for the chain of a hunt report. The
/// state must be the one the report was computed from.
pub fn certify_chain(report: &HuntReport, target: &DigitStream) -> Certificate {
    let window = report.window.clone();
    let max_p = report.chain.iter().map(|l| l.containment_precision).max().unwrap_or(1);
    let target_prefix = target.prefix(max_p);
    let links = report
        .chain
        .iter()
        .map(|link| {
            let p = link.containment_precision;
            let t = window_interval(&window, &target_prefix[..p as usize]);
            let lo = separate_below(&link.endpoints[0], &t.lo);
            let hi = separate_above(&link.endpoints[1], &t.hi);
            let width_upper = &hi.isolator().hi - &lo.isolator().lo;
            ChainWitness { segment: link.segment, lo, hi, precision: p, width_upper }
        })
        .collect::<Vec<_>>();
    let checked = links.len() as u64;
    let witness = NestedChainWitness { window, target_prefix: bits_to_string(&target_prefix), links };
    Certificate::sealed(
        Claim::NestedChain(witness),
        json!({ "target": target.describe(), "steps": report.steps, "mode": report.mode, "policy": report.policy }),
        report.budget,
        Outcome::Success { checked },
    )
}

/// Refines `a < x` until the isolator lies at or below `x`.
fn separate_below(a: &AlgebraicReal, x: &Dyadic) -> AlgebraicReal {
    let mut a = a.clone();
    while a.isolator().hi > *x {
        a.refine_once();
    }
    a
}

fn separate_above(a: &AlgebraicReal, x: &Dyadic) -> AlgebraicReal {
    let mut a = a.clone();
    while a.isolator().lo < *x {
        a.refine_once();
    }
    a
}

/// Convenience wrapper: hunt evidence straight from a state.
pub fn certify_hunt(state: &PlacementState, target: &DigitStream, budget: u64) -> Certificate {
    let report = crate::segments::hunt_in_state(target, state, budget);
    certify_chain(&report, target)
}

/// Pairwise bounded separation of elements `1 ..= count`.
pub fn scan_collisions(sequence: &dyn StreamSequence, count: u64, budget: u64) -> Certificate {
    assert!(count >= 2, "need at least two elements");
    let streams: Vec<DigitStream> = (1..=count).map(|i| sequence.get(i)).collect();
    let index_pairs: Vec<(u64, u64)> =
        (1..=count).flat_map(|i| (i + 1..=count).map(move |j| (i, j))).collect();
    let pairs: Vec<PairEntry> = index_pairs
        .par_iter()
        .map(|&(i, j)| PairEntry {
            i,
            j,
            outcome: reals_differ(&streams[i as usize - 1], &streams[j as usize - 1], budget),
        })
        .collect();
    let mut need = vec![0u64; count as usize];
    for e in &pairs {
        let len = match e.outcome {
            Separation::ProvedDifferent(p) => p,
            Separation::Unresolved => budget,
        };
        for k in [e.i, e.j] {
            let slot = &mut need[k as usize - 1];
            *slot = (*slot).max(len);
        }
    }
    let prefixes = streams.iter().zip(&need).map(|(s, &n)| bits_to_string(&s.prefix(n))).collect();
    let proved = pairs.iter().filter(|e| e.outcome.is_proved()).count() as u64;
    let unresolved = pairs.len() as u64 - proved;
    Certificate::sealed(
        Claim::CollisionScan(CollisionScanWitness { count, prefixes, pairs }),
        json!({ "sequence": sequence.describe() }),
        budget,
        Outcome::Tally { proved, unresolved },
    )
}

/// Full re-validation: schema, seal, then witness consistency.
pub fn check(cert: &Certificate) -> Result<(), CheckError> {
    if cert.schema != SCHEMA {
        return Err(CheckError::Schema(cert.schema.clone()));
    }
    if cert.seal != cert.compute_seal() {
        return Err(CheckError::Seal);
    }
    check_witness(cert)
}

/// Parses and re-validates a certificate file's contents.
pub fn check_json(text: &str) -> Result<Result<(), CheckError>, serde_json::Error> {
    let cert: Certificate = serde_json::from_str(text)?;
    Ok(check(&cert))
}

fn expect_outcome(stated: &Outcome, actual: Outcome) -> Result<(), CheckError> {
    if *stated == actual {
        Ok(())
    } else {
        Err(CheckError::Outcome { stated: format!("{stated:?}"), actual: format!("{actual:?}") })
    }
}

/// Witness-only re-validation, ignoring the seal.
pub fn check_witness(cert: &Certificate) -> Result<(), CheckError> {
    match &cert.claim {
        Claim::DigitDifference(w) => check_digit_difference(w, cert),
        Claim::RealDifference(w) => {
            for (i, e) in w.entries.iter().enumerate() {
                check_real_entry(i, e, cert.budget)?;
            }
            let (proved, unresolved) = real_tally(&w.entries);
            expect_outcome(&cert.outcome, Outcome::tally(proved, unresolved))
        }
        Claim::NonAlgebraicUpTo(w) => check_nonalgebraic(w, cert),
        Claim::NestedChain(w) => check_chain(w, cert),
        Claim::CollisionScan(w) => check_scan(w, cert),
    }
}

fn check_digit_difference(w: &DigitDifferenceWitness, cert: &Certificate) -> Result<(), CheckError> {
    let out = bits(&w.output_prefix, "output prefix")?;
    if w.count == 0 || out.len() as u64 != w.count {
        return Err(CheckError::Malformed("output prefix length must be count".into()));
    }
    if w.digits.len() as u64 != w.count || w.real.len() as u64 != w.count {
        return Err(CheckError::Malformed("one digit and one real entry per row".into()));
    }
    for (i, d) in w.digits.iter().enumerate() {
        let nu = i as u64 + 1;
        if d.row != nu || d.position != nu + w.offset {
            return Err(entry_err(i, "row or position out of sequence"));
        }
        if d.output_bit > 1 || d.row_bit > 1 {
            return Err(entry_err(i, "digits must be 0 or 1"));
        }
        if out[i] != d.output_bit {
            return Err(entry_err(i, "output bit disagrees with the output prefix"));
        }
        if d.output_bit == d.row_bit {
            return Err(entry_err(i, "digits do not differ"));
        }
    }
    for (i, e) in w.real.iter().enumerate() {
        if e.label != format!("row {}", i + 1) {
            return Err(entry_err(i, "real entry label out of sequence"));
        }
        let (left, right) = check_real_entry(i, e, cert.budget)?;
        let shared = left.len().min(out.len());
        if left[..shared] != out[..shared] {
            return Err(entry_err(i, "left prefix is not the output"));
        }
        let pos = w.digits[i].position as usize;
        if right.len() >= pos && right[pos - 1] != w.digits[i].row_bit {
            return Err(entry_err(i, "right prefix disagrees with the row bit"));
        }
    }
    let (proved, unresolved) = real_tally(&w.real);
    expect_outcome(&cert.outcome, Outcome::tally(proved, unresolved))
}

fn check_nonalgebraic(w: &NonAlgebraicWitness, cert: &Certificate) -> Result<(), CheckError> {
    if w.height == 0 || w.degree == 0 || w.precision < 8 || cert.budget != w.precision {
        return Err(CheckError::Malformed("parameters out of range".into()));
    }
    let prefix = bits(&w.prefix, "prefix")?;
    if prefix.len() as u64 != w.precision {
        return Err(CheckError::Malformed("prefix length must equal precision".into()));
    }
    if w.window.lo >= w.window.hi {
        return Err(CheckError::Malformed("empty window".into()));
    }
    if window_interval(&w.window, &prefix) != w.interval {
        return Err(CheckError::Malformed("interval does not match the prefix".into()));
    }
    let polys = bounded_polynomials(w.height, w.degree);
    if polys.len() as u64 != w.polynomials_checked {
        return Err(CheckError::Malformed(format!("expected {} polynomials", polys.len())));
    }
    let bad = violating(&polys, &w.interval);
    if bad != w.violating {
        return Err(CheckError::Malformed("violating polynomial list is wrong".into()));
    }
    let actual = if bad.is_empty() {
        Outcome::Success { checked: polys.len() as u64 }
    } else {
        Outcome::Failure { violations: bad.len() as u64 }
    };
    expect_outcome(&cert.outcome, actual)
}

fn check_chain(w: &NestedChainWitness, cert: &Certificate) -> Result<(), CheckError> {
    if w.window.lo >= w.window.hi {
        return Err(CheckError::Malformed("empty window".into()));
    }
    let target = bits(&w.target_prefix, "target prefix")?;
    for (i, link) in w.links.iter().enumerate() {
        for end in [&link.lo, &link.hi] {
            end.validate().map_err(|e| entry_err(i, e.to_string()))?;
        }
        let p = link.precision as usize;
        if p == 0 || p > target.len() {
            return Err(entry_err(i, "precision exceeds the stored target prefix"));
        }
        let t = window_interval(&w.window, &target[..p]);
        if link.lo.isolator().hi > t.lo || link.hi.isolator().lo < t.hi {
            return Err(entry_err(i, "segment does not contain the target interval"));
        }
        if link.width_upper != &link.hi.isolator().hi - &link.lo.isolator().lo {
            return Err(entry_err(i, "width bound disagrees with the isolators"));
        }
        if i > 0 {
            let outer = &w.links[i - 1];
            let lo_ord = compare(&outer.lo, &link.lo);
            let hi_ord = compare(&link.hi, &outer.hi);
            if lo_ord == Ordering::Greater || hi_ord == Ordering::Greater {
                return Err(entry_err(i, "segment is not nested in its predecessor"));
            }
            if lo_ord == Ordering::Equal && hi_ord == Ordering::Equal {
                return Err(entry_err(i, "segment repeats its predecessor"));
            }
        }
    }
    expect_outcome(&cert.outcome, Outcome::Success { checked: w.links.len() as u64 })
}

fn check_scan(w: &CollisionScanWitness, cert: &Certificate) -> Result<(), CheckError> {
    if w.count < 2 || w.prefixes.len() as u64 != w.count {
        return Err(CheckError::Malformed("one prefix per element, at least two elements".into()));
    }
    let prefixes = w.prefixes.iter().map(|s| bits(s, "element prefix")).collect::<Result<Vec<_>, _>>()?;
    let expected = (1..=w.count).flat_map(|i| (i + 1..=w.count).map(move |j| (i, j)));
    let mut n = 0usize;
    for (k, ((i, j), e)) in expected.zip(&w.pairs).enumerate() {
        n += 1;
        if (e.i, e.j) != (i, j) {
            return Err(entry_err(k, "pair out of sequence"));
        }
        let len = match e.outcome {
            Separation::ProvedDifferent(p) => p,
            Separation::Unresolved => cert.budget,
        } as usize;
        let (a, b) = (&prefixes[i as usize - 1], &prefixes[j as usize - 1]);
        if a.len() < len || b.len() < len {
            return Err(entry_err(k, "stored prefixes too short"));
        }
        if separate_prefixes(&a[..len], &b[..len]) != e.outcome {
            return Err(entry_err(k, "prefixes do not exhibit the stated separation"));
        }
    }
    if n != w.pairs.len() || n as u64 != w.count * (w.count - 1) / 2 {
        return Err(CheckError::Malformed("pair list incomplete".into()));
    }
    let proved = w.pairs.iter().filter(|e| e.outcome.is_proved()).count() as u64;
    expect_outcome(&cert.outcome, Outcome::Tally { proved, unresolved: w.pairs.len() as u64 - proved })
}
