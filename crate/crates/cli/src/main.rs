mod config;
mod emit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use cantor_core::algebraic::AlgebraicReal;
use cantor_core::digits::{bits_to_string, parse_bits};
use cantor_core::segments::{hunt_in_state, PlacementState};
use cantor_core::sigma::build_sigma_in;
use cantor_core::verifier::{self, certify_chain, Certificate};
use cantor_core::{AlgebraicEnumeration, Dyadic, DigitStream, StreamSequence};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{Flags, RunConfig};
use emit::{Emitter, Halt};

#[derive(Parser)]
#[command(name = "cantor", version, about = "Algebraic enumeration, offset diagonals, Σ layers and segment filling")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    /// Stop after this many records (for exercising checkpoint resume)
    #[arg(long, global = true, hide = true)]
    halt_after: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List algebraic numbers of the window in canonical order
    Enumerate,
    /// Offset diagonal of Σ at --depth, with optional certificates
    Diag {
        /// Write a digit/real difference certificate over --count rows
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Write a non-algebraicity certificate at --height/--degree/--precision
        #[arg(long)]
        nonalg_certificate: Option<PathBuf>,
    },
    /// Σ elements with provenance
    Layers {
        /// Indices such as `1,2,5-8`; defaults to 1..=--count
        indices: Option<String>,
        /// Write a collision scan over indices 1..=--count
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Place --count algebraic numbers and report created segments
    Segments,
    /// Hunt a target through nested segments
    Hunt {
        /// `liouville`, `diagonal`, a dyadic number, or a file of binary digits
        #[arg(long, default_value = "liouville", allow_hyphen_values = true)]
        target: String,
        /// Placements to run
        #[arg(long, default_value_t = 16)]
        steps: u64,
        /// Write a nested-chain certificate
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Re-validate a certificate file
    Verify { file: PathBuf },
}

enum Failure {
    Invalid(String),
    Usage(String),
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Usage(s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Command::Verify { file } = &cli.command {
        return verify(file);
    }
    let config = RunConfig::resolve(cli.flags)?;
    match cli.command {
        Command::Enumerate => enumerate(&config, cli.halt_after),
        Command::Diag { certificate, nonalg_certificate } => {
            diag(&config, certificate.as_deref(), nonalg_certificate.as_deref(), cli.halt_after)
        }
        Command::Layers { indices, certificate } => {
            layers(&config, indices.as_deref(), certificate.as_deref(), cli.halt_after)
        }
        Command::Segments => segments(&config, cli.halt_after),
        Command::Hunt { target, steps, certificate } => {
            hunt(&config, &target, steps, certificate.as_deref(), cli.halt_after)
        }
        Command::Verify { .. } => unreachable!(),
    }
}

fn verify(file: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let cert: Certificate = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    match verifier::check(&cert) {
        Ok(()) => {
            println!("valid {} certificate", cert.kind());
            Ok(())
        }
        Err(e) => Err(Failure::Invalid(e.to_string())),
    }
}

fn write_certificate(path: &Path, cert: &Certificate) -> Result<(), Failure> {
    std::fs::write(path, cert.to_json() + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn algebraic_json(a: &AlgebraicReal) -> Value {
    json!({
        "polynomial": a.poly().to_string(),
        "coefficients": a.poly(),
        "isolator": { "lo": a.isolator().lo.to_string(), "hi": a.isolator().hi.to_string() },
    })
}

fn enumerate(config: &RunConfig, halt: Option<u64>) -> Result<(), Failure> {
    let mut out = Emitter::start("enumerate", config, halt)?;
    let enumeration = AlgebraicEnumeration::shared(&config.window);
    for i in out.resumed()..config.count {
        let a = enumeration.get(i as usize);
        let stream = DigitStream::algebraic(a.clone(), config.window.clone()).expect("enumerated values lie in the window");
        let mut record = algebraic_json(&a);
        record["record"] = json!("algebraic");
        record["index"] = json!(i);
        record["digits"] = json!(stream.prefix_string(config.precision));
        if let Halt::Stop = out.record(&record)? {
            break;
        }
    }
    Ok(())
}

fn diag(config: &RunConfig, cert: Option<&Path>, nonalg: Option<&Path>, halt: Option<u64>) -> Result<(), Failure> {
    if nonalg.is_some() && config.precision < 8 {
        return Err(Failure::Usage("non-algebraicity certificates need --precision ≥ 8".into()));
    }
    let sigma = build_sigma_in(&config.window, config.depth);
    let rows: Arc<dyn StreamSequence> = Arc::new(sigma);
    let output = DigitStream::diagonal(rows.clone(), config.offset);
    let mut out = Emitter::start("diag", config, halt)?;
    if out.resumed() == 0 {
        out.record(&json!({
            "record": "diagonal",
            "level": config.depth,
            "offset": config.offset,
            "digits": output.prefix_string(config.precision),
        }))?;
    }
    if let Some(path) = cert {
        let c = verifier::certify_diagonal(&output, rows.as_ref(), config.offset, config.count, config.budget);
        write_certificate(path, &c)?;
    }
    if let Some(path) = nonalg {
        let c = verifier::certify_nonalgebraic(&output, &config.window, config.height, config.degree, config.precision);
        write_certificate(path, &c)?;
    }
    Ok(())
}

fn parse_indices(spec: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let bad = || format!("malformed index list `{spec}`");
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.parse::<u64>().map_err(|_| bad())?, b.parse::<u64>().map_err(|_| bad())?),
            None => {
                let n = part.parse::<u64>().map_err(|_| bad())?;
                (n, n)
            }
        };
        if a == 0 || b < a {
            return Err(bad());
        }
        out.extend(a..=b);
    }
    Ok(out)
}

fn layers(config: &RunConfig, indices: Option<&str>, cert: Option<&Path>, halt: Option<u64>) -> Result<(), Failure> {
    let indices = match indices {
        Some(spec) => parse_indices(spec)?,
        None => (1..=config.count).collect(),
    };
    if cert.is_some() && config.count < 2 {
        return Err(Failure::Usage("a collision scan needs --count ≥ 2".into()));
    }
    let sigma = build_sigma_in(&config.window, config.depth);
    let mut out = Emitter::start("layers", config, halt)?;
    for &i in &indices[out.resumed() as usize..] {
        let record = json!({
            "record": "sigma",
            "sigma_index": i,
            "provenance": sigma.provenance(i),
            "digits": sigma.get(i).prefix_string(config.precision),
        });
        if let Halt::Stop = out.record(&record)? {
            return Ok(());
        }
    }
    if let Some(path) = cert {
        let c = verifier::scan_collisions(&sigma, config.count, config.budget);
        write_certificate(path, &c)?;
    }
    Ok(())
}

fn segments(config: &RunConfig, halt: Option<u64>) -> Result<(), Failure> {
    let mut state = PlacementState::new(config.window.clone(), config.mode, config.policy);
    let mut out = Emitter::start("segments", config, halt)?;
    for step in 1..=config.count {
        let before = state.segments().len();
        state.advance();
        if step <= out.resumed() {
            continue;
        }
        let placed = state.placed().iter().find(|p| p.index as u64 == step - 1).expect("just placed");
        let created: Vec<Value> = state.segments()[before..]
            .iter()
            .map(|s| {
                json!({
                    "id": s.id,
                    "endpoints": [algebraic_json(&s.lo.value), algebraic_json(&s.hi.value)],
                    "filler": s.filler.describe(),
                    "filler_digits": s.filler.prefix_string(config.precision),
                })
            })
            .collect();
        let retired: Vec<usize> =
            state.segments().iter().filter(|s| s.retired == Some(step as usize)).map(|s| s.id).collect();
        let mut record = algebraic_json(&placed.value);
        record["record"] = json!("placement");
        record["step"] = json!(step);
        record["index"] = json!(placed.index);
        record["created"] = Value::Array(created);
        record["retired"] = json!(retired);
        record["active"] = json!(state.active_segments().count());
        if let Halt::Stop = out.record(&record)? {
            break;
        }
    }
    Ok(())
}

fn resolve_target(spec: &str, config: &RunConfig) -> Result<DigitStream, String> {
    match spec {
        "liouville" => return Ok(DigitStream::liouville()),
        "diagonal" => {
            let rows: Arc<dyn StreamSequence> = Arc::new(build_sigma_in(&config.window, config.depth));
            return Ok(DigitStream::diagonal(rows, config.offset));
        }
        _ => {}
    }
    if let Ok(x) = spec.parse::<Dyadic>() {
        if x < config.window.lo || x >= config.window.hi {
            return Err(format!("target {spec} lies outside the window"));
        }
        return DigitStream::algebraic(AlgebraicReal::from_dyadic(&x), config.window.clone()).map_err(|e| e.to_string());
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{spec}: {e}"))?;
        let compact: String = text.split_whitespace().collect();
        let bits = parse_bits(&compact).filter(|b| !b.is_empty()).ok_or_else(|| format!("{spec}: not a binary digit prefix"))?;
        return Ok(DigitStream::pattern(bits, 0));
    }
    Err(format!("unknown target `{spec}` (expected liouville, diagonal, a dyadic number, or a digit file)"))
}

fn hunt(config: &RunConfig, target: &str, steps: u64, cert: Option<&Path>, halt: Option<u64>) -> Result<(), Failure> {
    if steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    let target = resolve_target(target, config)?;
    let mut state = PlacementState::new(config.window.clone(), config.mode, config.policy);
    for _ in 0..steps {
        state.advance();
    }
    let report = hunt_in_state(&target, &state, config.budget);
    let mut out = Emitter::start("hunt", config, halt)?;
    if out.resumed() == 0 {
        let mut record = serde_json::to_value(&report).expect("report serializes");
        record["record"] = json!("hunt");
        record["target_prefix"] = json!(bits_to_string(&target.prefix(config.precision)));
        out.record(&record)?;
    }
    if let Some(path) = cert {
        write_certificate(path, &certify_chain(&report, &target))?;
    }
    Ok(())
}
