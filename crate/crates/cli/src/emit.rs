//! JSON-lines emission with a header record and optional checkpointing.

use std::io::{self, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};

pub const RUN_SCHEMA: &str = "cantor-run/1";
const CHECKPOINT_SCHEMA: &str = "cantor-checkpoint/1";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    schema: String,
    command: String,
    config: Value,
    lines: Vec<String>,
}

/// Writes records to stdout in order. With a checkpoint, every emitted line
/// is persisted, and a rerun replays the saved lines before continuing.
pub struct Emitter {
    format: OutputFormat,
    out: io::StdoutLock<'static>,
    checkpoint: Option<(PathBuf, Checkpoint)>,
    resumed: u64,
    halt_after: Option<u64>,
}

pub enum Halt {
    Continue,
    Stop,
}

impl Emitter {
    pub fn start(command: &str, config: &RunConfig, halt_after: Option<u64>) -> Result<Emitter, String> {
        let config_value = serde_json::to_value(config).expect("config serializes");
        let mut out = io::stdout().lock();
        if config.output == OutputFormat::Jsonl {
            let header = json!({ "record": "header", "schema": RUN_SCHEMA, "command": command, "config": config_value });
            writeln!(out, "{header}").map_err(|e| e.to_string())?;
        }
        let mut checkpoint = None;
        let mut resumed = 0;
        if let Some(path) = &config.checkpoint {
            let state = if path.exists() {
                let text = std::fs::read_to_string(path).map_err(|e| format!("checkpoint {}: {e}", path.display()))?;
                let saved: Checkpoint =
                    serde_json::from_str(&text).map_err(|e| format!("checkpoint {}: {e}", path.display()))?;
                if saved.schema != CHECKPOINT_SCHEMA || saved.command != command || saved.config != config_value {
                    return Err(format!("checkpoint {} belongs to a different run", path.display()));
                }
                for line in &saved.lines {
                    writeln!(out, "{line}").map_err(|e| e.to_string())?;
                }
                resumed = saved.lines.len() as u64;
                saved
            } else {
                Checkpoint {
                    schema: CHECKPOINT_SCHEMA.into(),
                    command: command.into(),
                    config: config_value,
                    lines: Vec::new(),
                }
            };
            checkpoint = Some((path.clone(), state));
        }
        Ok(Emitter { format: config.output, out, checkpoint, resumed, halt_after })
    }

    /// Records already emitted by an earlier interrupted run.
    pub fn resumed(&self) -> u64 {
        self.resumed
    }

    /// Emits one record; in digits mode only its `digits` fields are printed.
    pub fn record(&mut self, value: &Value) -> Result<Halt, String> {
        let line = match self.format {
            OutputFormat::Jsonl => value.to_string(),
            OutputFormat::Digits => digits_line(value),
        };
        writeln!(self.out, "{line}").map_err(|e| e.to_string())?;
        self.out.flush().map_err(|e| e.to_string())?;
        let mut emitted = self.resumed;
        if let Some((path, state)) = &mut self.checkpoint {
            state.lines.push(line);
            emitted = state.lines.len() as u64;
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, serde_json::to_vec(state).expect("checkpoint serializes"))
                .and_then(|_| std::fs::rename(&tmp, &*path))
                .map_err(|e| format!("checkpoint {}: {e}", path.display()))?;
        }
        match self.halt_after {
            Some(n) if emitted >= n => Ok(Halt::Stop),
            _ => Ok(Halt::Continue),
        }
    }
}

fn digits_line(value: &Value) -> String {
    let mut found = Vec::new();
    collect_digits(value, &mut found);
    if found.is_empty() {
        value.to_string()
    } else {
        found.join(" ")
    }
}

fn collect_digits(value: &Value, found: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::String(s) if k.ends_with("digits") => found.push(s.clone()),
                    _ => collect_digits(v, found),
                }
            }
        }
        Value::Array(items) => items.iter().for_each(|v| collect_digits(v, found)),
        _ => {}
    }
}
