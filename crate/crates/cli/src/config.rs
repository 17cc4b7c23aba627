use std::path::PathBuf;

use cantor_core::{Dyadic, DyadicInterval, FillerPolicy, PlacementMode};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Flags shared by every subcommand. Each may also come from `--config`.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Working window `M:W` with dyadic endpoints, e.g. `-4:4` or `1/2:1`
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Digits per emitted stream (and p for non-algebraicity certificates)
    #[arg(long, global = true)]
    pub precision: Option<u64>,
    /// Σ level
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Placement mode: adjacent | allpairs
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Filler policy: liouville-affine | diagonal-local
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Number of records, rows or placements
    #[arg(long, global = true)]
    pub count: Option<u64>,
    /// Diagonal column offset
    #[arg(long, global = true)]
    pub offset: Option<u64>,
    /// Height bound H for non-algebraicity certificates
    #[arg(long, global = true)]
    pub height: Option<u64>,
    /// Degree bound d for non-algebraicity certificates
    #[arg(long, global = true)]
    pub degree: Option<u64>,
    /// Digit budget for difference proofs and containment
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Output format: digits | jsonl
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// Checkpoint file for resumable runs
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// TOML file with any of these settings; flags win
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    fn or(self, file: Flags) -> Flags {
        Flags {
            window: self.window.or(file.window),
            precision: self.precision.or(file.precision),
            depth: self.depth.or(file.depth),
            mode: self.mode.or(file.mode),
            policy: self.policy.or(file.policy),
            count: self.count.or(file.count),
            offset: self.offset.or(file.offset),
            height: self.height.or(file.height),
            degree: self.degree.or(file.degree),
            budget: self.budget.or(file.budget),
            output: self.output.or(file.output),
            checkpoint: self.checkpoint.or(file.checkpoint),
            config: self.config,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Digits,
    Jsonl,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub window: DyadicInterval,
    pub precision: u64,
    pub depth: u32,
    pub mode: PlacementMode,
    pub policy: FillerPolicy,
    pub count: u64,
    pub offset: u64,
    pub height: u64,
    pub degree: u64,
    pub budget: u64,
    pub output: OutputFormat,
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
}

pub fn parse_window(s: &str) -> Result<DyadicInterval, String> {
    let (m, w) = s.split_once(':').ok_or_else(|| format!("window `{s}` must look like M:W"))?;
    let parse = |t: &str| {
        t.trim().parse::<Dyadic>().map_err(|e| format!("window endpoint `{t}`: {e} (endpoints must be dyadic rationals)"))
    };
    DyadicInterval::new(parse(m)?, parse(w)?).map_err(|_| format!("window `{s}` needs M < W"))
}

impl RunConfig {
    pub fn resolve(flags: Flags) -> Result<RunConfig, String> {
        let flags = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
                let file: Flags = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
                flags.or(file)
            }
            None => flags,
        };
        let window = match &flags.window {
            Some(s) => parse_window(s)?,
            None => DyadicInterval::unit(),
        };
        let mode = flags.mode.as_deref().unwrap_or("adjacent").parse().map_err(|e| format!("{e}"))?;
        let policy = flags.policy.as_deref().unwrap_or("liouville-affine").parse().map_err(|e| format!("{e}"))?;
        let output = match flags.output.as_deref().unwrap_or("jsonl") {
            "jsonl" => OutputFormat::Jsonl,
            "digits" => OutputFormat::Digits,
            other => return Err(format!("unknown output format `{other}` (expected digits or jsonl)")),
        };
        let positive = |name: &str, v: Option<u64>, default: u64| match v.unwrap_or(default) {
            0 => Err(format!("--{name} must be at least 1")),
            n => Ok(n),
        };
        Ok(RunConfig {
            window,
            precision: positive("precision", flags.precision, 64)?,
            depth: flags.depth.unwrap_or(2),
            mode,
            policy,
            count: positive("count", flags.count, 10)?,
            offset: flags.offset.unwrap_or(0),
            height: positive("height", flags.height, 4)?,
            degree: positive("degree", flags.degree, 3)?,
            budget: positive("budget", flags.budget, 512)?,
            output,
            checkpoint: flags.checkpoint,
        })
    }
}
