use anyhow::Result;
use clap::ValueEnum;
use pesinlab::dynamics::{make_map, TorusMap};
use pesinlab::partition::{GridPartition, McConfig, MeasureMode, DEFAULT_SAMPLES};
use pesinlab::Exec;
use serde::{Deserialize, Serialize};

use crate::config::{usage, Common};

pub mod gamow_evolve;
pub mod ks_entropy;
pub mod lyapunov;
pub mod pesin;
pub mod prescription;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Exact,
    Mc,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Exact => "exact",
            ModeKind::Mc => "Monte-Carlo",
        }
    }
}

pub fn exec(common: &Common) -> Exec {
    match common.threads {
        Some(1) => Exec::Sequential,
        _ => Exec::default(),
    }
}

pub fn load_map(name: &str) -> Result<TorusMap> {
    Ok(make_map(name)?)
}

/// Comma-separated list of `MxN` grids.
pub fn parse_ladder(spec: &str) -> Result<Vec<GridPartition>> {
    spec.split(',')
        .map(|g| {
            g.trim()
                .parse::<GridPartition>()
                .map_err(|e| usage(format!("--grid: {e}")))
        })
        .collect()
}

pub fn measure_mode(kind: ModeKind, samples: Option<usize>, seed: u64) -> MeasureMode {
    match kind {
        ModeKind::Exact => MeasureMode::Exact,
        ModeKind::Mc => MeasureMode::MonteCarlo(McConfig {
            n_samples: samples.unwrap_or(DEFAULT_SAMPLES),
            seed,
            keep_words: false,
        }),
    }
}

pub fn ln_bounds(bounds: (f64, f64), n: usize) -> (f64, f64) {
    let k = (n + 1) as f64;
    (k * bounds.0.ln(), k * bounds.1.ln())
}
