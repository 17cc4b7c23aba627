//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --release --test acceptance`.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cantor_core::algebraic::roots_in;
use cantor_core::segments::{containment, hunt_target, Containment, HuntConfig};
use cantor_core::sigma::build_sigma_in;
use cantor_core::verifier::{self, certify_chain, check_json, Claim, Outcome};
use cantor_core::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

/// Base digits extracted for 64 digits of Σ₃ elements 1..=256 with fresh
/// caches, recorded at first calibration.
const CALIBRATED_BASE_DIGITS: u64 = 46_721;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit() -> DyadicInterval {
    DyadicInterval::unit()
}

fn sigma0_rows() -> Arc<dyn StreamSequence> {
    Arc::new(build_sigma_in(&unit(), 0))
}

fn enumeration_oracle() -> Result<String, String> {
    let window = DyadicInterval::from_ints(-4, 4);
    let expected = oracle::oracle(-4.0, 4.0, 8);
    ensure(expected.len() >= 200, || format!("oracle produced only {}", expected.len()))?;
    let e = AlgebraicEnumeration::new(window.clone());
    for (i, want) in expected.iter().take(200).enumerate() {
        let got = e.entry(i);
        ensure((got.value.to_f64() - want.value).abs() < 1e-9, || format!("index {i}: {:?} vs {}", got.value, want.value))?;
        ensure(got.size_class == want.class as u32, || format!("index {i}: class {} vs {}", got.size_class, want.class))?;
        let p = IntPolynomial::new(want.coeffs.iter().rev().copied());
        let exact = roots_in(&p, &window).iter().any(|r| compare(r, &got.value) == Ordering::Equal);
        ensure(exact, || format!("index {i}: {:?} is not a root of {p}", got.value))?;
    }
    Ok("200 entries match".into())
}

fn diagonal_digits() -> Result<String, String> {
    let t = diagonalize(sigma0_rows(), 0);
    let digits = t.prefix(1024);
    // rows read through an independent instance with its own caches
    let rows = sigma0_rows();
    for nu in 1..=1000u64 {
        let a = rows.get(nu).digit_at(nu);
        ensure(digits[nu as usize - 1] != a, || format!("digit {nu} equals a_νν"))?;
    }
    Ok("1000 digits differ from a_νν".into())
}

fn diagonal_reals() -> Result<String, String> {
    let rows = sigma0_rows();
    let t = diagonalize(rows.clone(), 0);
    let cert = verifier::certify_diagonal(&t, rows.as_ref(), 0, 200, 512);
    verifier::check(&cert).map_err(|e| e.to_string())?;
    ensure(cert.outcome == Outcome::Success { checked: 200 }, || format!("{:?}", cert.outcome))?;
    Ok("200 ProvedDifferent, 0 Unresolved".into())
}

fn nonalgebraic_surrogate() -> Result<String, String> {
    let t = diagonalize(sigma0_rows(), 0);
    let cert = certify_nonalgebraic(&t, &unit(), 6, 4, 128);
    ensure(matches!(cert.outcome, Outcome::Success { .. }), || format!("diagonal: {:?}", cert.outcome))?;
    verifier::check(&cert).map_err(|e| e.to_string())?;

    let window = DyadicInterval::from_ints(-4, 4);
    let e = AlgebraicEnumeration::shared(&window);
    let mut pool: Vec<AlgebraicReal> = (0..300)
        .map(|i| e.get(i))
        .filter(|a| a.poly().height() <= 4.into() && a.poly().degree().unwrap() <= 4)
        .collect();
    ensure(pool.len() >= 20, || format!("only {} planted candidates", pool.len()))?;
    let mut rng = StdRng::seed_from_u64(2024);
    for n in 0..20 {
        let a = pool.swap_remove(rng.random_range(0..pool.len()));
        let s = DigitStream::algebraic(a.clone(), window.clone()).unwrap();
        let c = certify_nonalgebraic(&s, &window, 6, 4, 128);
        let Claim::NonAlgebraicUpTo(w) = &c.claim else { unreachable!() };
        ensure(matches!(c.outcome, Outcome::Failure { .. }), || format!("planted {n} {a:?} passed"))?;
        let confirmed =
            w.violating.iter().any(|p| roots_in(p, &window).iter().any(|r| compare(r, &a) == Ordering::Equal));
        ensure(confirmed, || format!("planted {n} {a:?}: no cited polynomial vanishes there"))?;
    }
    Ok("diagonal certified at H=6 d=4 p=128; 20 planted failures confirmed".into())
}

fn sigma_fairness() -> Result<String, String> {
    let sigma = build_sigma_in(&unit(), 3);
    let mut scan: BTreeMap<(u32, u64), u64> = BTreeMap::new();
    for k in 1..=800u64 {
        let p = sigma.provenance(k);
        ensure(scan.insert((p.layer, p.element()), k).is_none(), || format!("index {k} repeats a provenance"))?;
    }
    let independent = build_sigma_in(&unit(), 3);
    for layer in 0..=3u32 {
        for j in 1..=100u64 {
            let idx = index_of(layer, j, 3).map_err(|e| e.to_string())?;
            ensure(scan.get(&(layer, j)) == Some(&idx), || format!("layer {layer} element {j}: index_of {idx}"))?;
            let direct = independent.layer_element(layer, j).map_err(|e| e.to_string())?;
            ensure(sigma.get(idx).prefix(64) == direct.prefix(64), || format!("layer {layer} element {j}: digits differ"))?;
        }
    }
    Ok("400 (layer, element) pairs resolved".into())
}

fn example_one_structure() -> Result<String, String> {
    for policy in [FillerPolicy::LiouvilleAffine, FillerPolicy::DiagonalLocal] {
        let mut st = PlacementState::new(unit(), PlacementMode::AllPairs, policy);
        for _ in 0..20 {
            st.advance();
        }
        ensure(st.segments().len() == 190, || format!("{} segments", st.segments().len()))?;
        for s in st.segments() {
            let c = containment(&s.lo.value, &s.hi.value, &s.filler, &unit(), 64);
            ensure(matches!(c, Containment::Contains(_)), || format!("{policy}: segment {} {c:?}", s.id))?;
        }
    }
    let mut st = PlacementState::new(unit(), PlacementMode::Adjacent, FillerPolicy::LiouvilleAffine);
    for _ in 0..20 {
        st.advance();
    }
    let mut active: Vec<&segments::Segment> = st.active_segments().collect();
    active.sort_by(|a, b| compare(&a.lo.value, &b.lo.value));
    let placed = st.placed();
    ensure(active.len() == placed.len() - 1, || format!("{} active segments", active.len()))?;
    for (s, w) in active.iter().zip(placed.windows(2)) {
        ensure(s.lo.index == w[0].index && s.hi.index == w[1].index, || format!("segment {} is not a gap", s.id))?;
    }
    Ok("190 filled segments; adjacent segments tile the hull".into())
}

fn hunt_nesting() -> Result<String, String> {
    let target = DigitStream::liouville();
    let report = hunt_target(&target, 64, &HuntConfig::default());
    ensure(report.chain.len() >= 3, || format!("chain length {}", report.chain.len()))?;
    for w in report.chain.windows(2) {
        ensure(w[1].width_upper < w[0].width_upper, || "widths not strictly decreasing".into())?;
    }
    let cert = certify_chain(&report, &target);
    verifier::check(&cert).map_err(|e| e.to_string())?;
    let widths: Vec<i64> = report.chain.iter().map(|l| l.width_log2).collect();
    Ok(format!("chain length {}, width log2 {widths:?}", report.chain.len()))
}

fn leaves(v: &Value, path: &mut Vec<Value>, out: &mut Vec<Vec<Value>>) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| {
            path.push(Value::String(k.clone()));
            leaves(x, path, out);
            path.pop();
        }),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| {
            path.push(Value::from(i));
            leaves(x, path, out);
            path.pop();
        }),
        Value::Null => {}
        _ => out.push(path.clone()),
    }
}

fn leaf_mut<'a>(v: &'a mut Value, path: &[Value]) -> &'a mut Value {
    path.iter().fold(v, |node, key| match key {
        Value::String(k) => &mut node[k.as_str()],
        Value::Number(i) => &mut node[i.as_u64().unwrap() as usize],
        _ => unreachable!(),
    })
}

fn mutate(leaf: &mut Value, rng: &mut StdRng) {
    match leaf {
        Value::Bool(b) => *b = !*b,
        Value::Number(n) => {
            *leaf = match n.as_u64() {
                Some(0) => Value::from(1u64),
                Some(u) if rng.random_bool(0.5) => Value::from(u - 1),
                Some(u) => Value::from(u + 1),
                None => Value::from(n.as_i64().unwrap() + 1),
            }
        }
        Value::String(s) => {
            let mut chars: Vec<char> = s.chars().collect();
            if chars.is_empty() {
                *s = "0".into();
                return;
            }
            let i = rng.random_range(0..chars.len());
            chars[i] = match chars[i] {
                '0' => '1',
                '1' => '0',
                c if c.is_ascii_digit() => if c == '9' { '8' } else { (c as u8 + 1) as char },
                'a' => 'b',
                _ => 'a',
            };
            *s = chars.into_iter().collect();
        }
        _ => unreachable!(),
    }
}

fn tamper_detection() -> Result<String, String> {
    let rows = sigma0_rows();
    let t = diagonalize(rows.clone(), 0);
    let target = DigitStream::liouville();
    let certs = [
        verifier::certify_diagonal(&t, rows.as_ref(), 0, 20, 256),
        verifier::certify_real_difference(&[(t.clone(), target.clone()), (t.clone(), rows.get(3))], 128),
        certify_nonalgebraic(&target, &unit(), 3, 2, 32),
        certify_chain(&hunt_target(&target, 24, &HuntConfig::default()), &target),
        scan_collisions(&build_sigma_in(&unit(), 1), 8, 128),
    ];
    let values: Vec<Value> = certs
        .iter()
        .map(|c| {
            verifier::check(c).map(|_| serde_json::to_value(c).unwrap()).map_err(|e| format!("{}: {e}", c.kind()))
        })
        .collect::<Result<_, _>>()?;
    let mut rng = StdRng::seed_from_u64(8);
    for n in 0..100 {
        let mut v = values[n % values.len()].clone();
        let mut paths = Vec::new();
        leaves(&v, &mut Vec::new(), &mut paths);
        let path = &paths[rng.random_range(0..paths.len())];
        let leaf = leaf_mut(&mut v, path);
        let before = leaf.clone();
        mutate(leaf, &mut rng);
        ensure(*leaf != before, || format!("mutation {n} was a no-op"))?;
        let accepted = matches!(check_json(&v.to_string()), Ok(Ok(())));
        ensure(!accepted, || format!("mutation {n} at {path:?} accepted"))?;
    }
    Ok("100/100 mutations rejected".into())
}

fn reproducibility() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_cantor");
    let run = |dir: &std::path::Path| -> Result<Vec<Vec<u8>>, String> {
        let cert = dir.join("diag.json");
        let chain = dir.join("chain.json");
        let scan = dir.join("scan.json");
        let c = cert.to_str().unwrap();
        let invocations: Vec<Vec<&str>> = vec![
            vec!["enumerate"],
            vec!["diag", "--certificate", c],
            vec!["layers", "--certificate", scan.to_str().unwrap()],
            vec!["segments"],
            vec!["hunt", "--certificate", chain.to_str().unwrap()],
            vec!["verify", c],
        ];
        let mut outputs = Vec::new();
        for args in invocations {
            let out = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))?;
            outputs.push(out.stdout);
        }
        for f in [&cert, &chain, &scan] {
            outputs.push(std::fs::read(f).map_err(|e| e.to_string())?);
        }
        Ok(outputs)
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = (run(a.path())?, run(b.path())?);
    for (i, (x, y)) in first.iter().zip(&second).enumerate() {
        ensure(x == y, || format!("output {i} differs between runs"))?;
    }
    Ok(format!("{} outputs byte-identical", first.len()))
}

fn performance() -> Result<String, String> {
    let sigma = build_sigma_in(&unit(), 3);
    for i in 1..=256 {
        sigma.get(i).prefix(64);
    }
    let used = sigma.base_digit_count();
    let ceiling = CALIBRATED_BASE_DIGITS * 3 / 2;
    ensure(used <= ceiling, || format!("{used} base digits exceeds ceiling {ceiling}"))?;
    Ok(format!("{used} base digits (calibrated {CALIBRATED_BASE_DIGITS}, ceiling {ceiling})"))
}

fn main() {
    let criteria: [(u32, &str, Option<u64>, Check); 10] = [
        (1, "enumeration oracle equivalence", Some(60), enumeration_oracle),
        (2, "diagonal digit-difference", Some(120), diagonal_digits),
        (3, "diagonal real-difference", Some(300), diagonal_reals),
        (4, "non-algebraicity surrogate", Some(300), nonalgebraic_surrogate),
        (5, "Σ fairness", None, sigma_fairness),
        (6, "segment structure", None, example_one_structure),
        (7, "hunt nesting", Some(120), hunt_nesting),
        (8, "certificate tamper detection", None, tamper_detection),
        (9, "CLI reproducibility", None, reproducibility),
        (10, "performance contract", None, performance),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(secs)) if elapsed > Duration::from_secs(secs) => Err(format!("exceeded {secs} s")),
            (r, _) => r,
        };
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("criterion {id:>2} {status}  {name} ({:.2} s): {detail}", elapsed.as_secs_f64());
        if result.is_err() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
