use anyhow::Result;
use clap::Args;
use pesinlab::partition::{hks_estimate_with, HksEstimate};
use serde::{Deserialize, Serialize};

use super::{exec, load_map, measure_mode, parse_ladder, ModeKind};
use crate::config::{required, resolve, CommonArgs};
use crate::output::{full, sig, Output};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct KsEntropyArgs {
    /// identity | baker | cat
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    /// Grid or comma-separated ladder of grids, e.g. `2x1` or `4x4,8x8` [default: 2x1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Deepest refinement n [default: 10].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Word measures from exact polygon geometry or Monte-Carlo counts [default: exact].
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeKind>,
    /// Monte-Carlo sample count [default: 1000000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Config {
    map: String,
    grid: String,
    depth: usize,
    mode: ModeKind,
    samples: Option<usize>,
}

/// Drop per-word tables before serialising; they dominate the file size.
pub fn strip_words(est: &mut HksEstimate) {
    for entry in &mut est.profile {
        for r in &mut entry.records {
            r.word_measures.clear();
        }
    }
}

pub fn profile_rows(est: &HksEstimate) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for entry in &est.profile {
        for r in &entry.records {
            rows.push(vec![
                entry.grid.to_string(),
                r.n.to_string(),
                r.nonempty_words.to_string(),
                full(r.entropy),
            ]);
        }
    }
    rows
}

pub fn run(common_args: &CommonArgs, args: &KsEntropyArgs) -> Result<()> {
    let (common, args) = resolve(common_args, args)?;
    let mode = args.mode.unwrap_or(ModeKind::Exact);
    let cfg = Config {
        map: required(args.map, "map")?,
        grid: args.grid.unwrap_or_else(|| "2x1".into()),
        depth: args.depth.unwrap_or(10),
        mode,
        samples: match mode {
            ModeKind::Mc => Some(args.samples.unwrap_or(pesinlab::partition::DEFAULT_SAMPLES)),
            ModeKind::Exact => None,
        },
    };
    let map = load_map(&cfg.map)?;
    let ladder = parse_ladder(&cfg.grid)?;
    let mut est = hks_estimate_with(
        &map,
        &ladder,
        cfg.depth,
        &measure_mode(mode, cfg.samples, common.seed),
        exec(&common),
    )?;
    strip_words(&mut est);
    for entry in &est.profile {
        for r in &entry.records {
            eprintln!(
                "grid {} n={} R_n={} H={}",
                entry.grid,
                r.n,
                r.nonempty_words,
                sig(r.entropy)
            );
        }
    }

    let mut out = Output::new(&common)?;
    out.json("ks-entropy", &common, &cfg, &est)?;
    out.csv(
        "ks-entropy.csv",
        &["grid", "n", "R_n", "entropy"],
        &profile_rows(&est),
    )?;

    let mut summary = format!(
        "map {}, depth {}, {} measures\n",
        cfg.map,
        cfg.depth,
        mode.name()
    );
    for entry in &est.profile {
        summary.push_str(&format!(
            "grid {}: h_mu = {} (fit n = {}..{}), H(n)/n = {}\n",
            entry.grid,
            sig(entry.estimate.rate),
            entry.estimate.fit_start,
            entry.estimate.fit_end,
            sig(entry.estimate.ratio),
        ));
    }
    summary.push_str(&format!(
        "h_KS estimate = {} (grid {})\n",
        sig(est.value),
        est.best
    ));
    out.text("ks-entropy.txt", &summary)?;
    print!("{summary}");
    Ok(())
}
