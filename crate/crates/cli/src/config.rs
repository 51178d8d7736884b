//! Layering of command-line flags over a JSON config file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SEED_ENV: &str = "PESINLAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonArgs {
    /// JSON file with defaults for any flag (keys are flag names with underscores).
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Seed for every random choice; falls back to $PESINLAB_SEED, then 0.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads for the parallel loops.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Common {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Format,
}

pub const COMMON_KEYS: [&str; 4] = ["out", "seed", "threads", "format"];

/// An error the user can fix by changing flags or the config file.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn read_config(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(usage(format!(
            "config {} must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(usage(format!(
            "config {} is not valid JSON: {e}",
            path.display()
        ))),
    }
}

/// Merge `flags` over the config file and return `(common, command args)`.
pub fn resolve<A>(common: &CommonArgs, flags: &A) -> Result<(Common, A)>
where
    A: Args + Serialize + DeserializeOwned,
{
    let probe = A::augment_args(clap::Command::new("probe"));
    let known: Vec<&str> = probe.get_arguments().map(|a| a.get_id().as_str()).collect();
    let file = match &common.config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    let (mut file_common, mut file_cmd) = (Map::new(), Map::new());
    for (k, v) in file {
        if COMMON_KEYS.contains(&k.as_str()) {
            file_common.insert(k, v);
        } else if known.contains(&k.as_str()) {
            file_cmd.insert(k, v);
        } else {
            bail!(UsageError(format!(
                "config: unknown key `{k}` for this command"
            )));
        }
    }
    let common_merged: CommonArgs = overlay(file_common, common)?;
    let cmd: A = overlay(file_cmd, flags)?;

    let seed = match common_merged.seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
            Err(_) => 0,
        },
    };
    if common_merged.threads == Some(0) {
        bail!(UsageError("--threads must be at least 1".into()));
    }
    Ok((
        Common {
            out: common_merged
                .out
                .unwrap_or_else(|| PathBuf::from("pesinlab-out")),
            seed,
            threads: common_merged.threads,
            format: common_merged.format.unwrap_or(Format::Both),
        },
        cmd,
    ))
}

fn overlay<T: Serialize + DeserializeOwned>(mut base: Map<String, Value>, flags: &T) -> Result<T> {
    let Value::Object(set) = serde_json::to_value(flags).context("serialising flags")? else {
        unreachable!("argument structs serialise to objects")
    };
    for (k, v) in set {
        base.insert(k, v);
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| usage(format!("config: {e}")))
}

/// `value`, or a usage error naming the missing flag.
pub fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| {
        usage(format!(
            "missing required option --{flag} (flag or config key)"
        ))
    })
}
