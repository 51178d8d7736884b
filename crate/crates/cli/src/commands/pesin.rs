use anyhow::Result;
use clap::Args;
use pesinlab::lyapunov::{pesin_residual, positive_sum_field_with, PesinReport};
use pesinlab::partition::{hks_estimate_with, HksEstimate, DEFAULT_SAMPLES};
use serde::{Deserialize, Serialize};

use super::ks_entropy::{profile_rows, strip_words};
use super::lyapunov::initial_points;
use super::{exec, load_map, measure_mode, parse_ladder, ModeKind};
use crate::config::{required, resolve, usage, CommonArgs};
use crate::output::{sig, Output};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PesinArgs {
    /// identity | baker | cat
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    /// Grid ladder for the entropy side [default: 2x1 for baker, 2x2 for identity, 4x4,8x8 for cat].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Deepest refinement [default: 12 exact, 10 Monte-Carlo].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// [default: mc for cat, exact otherwise]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeKind>,
    /// Monte-Carlo sample count [default: 1000000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Tangent-map steps per Lyapunov sample point [default: 10000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Sample points for the phase-space average of the exponents [default: 16].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Config {
    map: String,
    grid: String,
    depth: usize,
    mode: ModeKind,
    samples: Option<usize>,
    steps: usize,
    points: usize,
}

#[derive(Debug, Serialize)]
struct PesinResult {
    entropy: HksEstimate,
    report: PesinReport,
}

fn default_ladder(map: &str) -> &'static str {
    match map {
        "cat" => "4x4,8x8",
        "identity" => "2x2",
        _ => "2x1",
    }
}

pub fn run(common_args: &CommonArgs, args: &PesinArgs) -> Result<()> {
    let (common, args) = resolve(common_args, args)?;
    let map_name = required(args.map, "map")?;
    let mode = args.mode.unwrap_or(if map_name == "cat" {
        ModeKind::Mc
    } else {
        ModeKind::Exact
    });
    let cfg = Config {
        grid: args
            .grid
            .unwrap_or_else(|| default_ladder(&map_name).into()),
        depth: args.depth.unwrap_or(match mode {
            ModeKind::Exact => 12,
            ModeKind::Mc => 10,
        }),
        mode,
        samples: match mode {
            ModeKind::Mc => Some(args.samples.unwrap_or(DEFAULT_SAMPLES)),
            ModeKind::Exact => None,
        },
        steps: args.steps.unwrap_or(10_000),
        points: args.points.unwrap_or(16),
        map: map_name,
    };
    if cfg.points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    let map = load_map(&cfg.map)?;
    let ladder = parse_ladder(&cfg.grid)?;
    let ex = exec(&common);
    let mut entropy = hks_estimate_with(
        &map,
        &ladder,
        cfg.depth,
        &measure_mode(mode, cfg.samples, common.seed),
        ex,
    )?;
    strip_words(&mut entropy);
    // a separate stream from the Monte-Carlo sampler
    let points = initial_points(common.seed ^ 0x9e37_79b9_7f4a_7c15, cfg.points);
    let positive_sum = positive_sum_field_with(&map, &points, cfg.steps, ex)?;
    let report = pesin_residual(entropy.value, positive_sum)?;
    let result = PesinResult { entropy, report };

    let mut out = Output::new(&common)?;
    out.json("pesin", &common, &cfg, &result)?;
    out.csv(
        "pesin.csv",
        &["grid", "n", "R_n", "entropy"],
        &profile_rows(&result.entropy),
    )?;
    let summary = format!(
        "map {}: h_KS = {} (grid {}), positive Lyapunov sum = {}\nresidual = {}, relative residual = {}\n",
        cfg.map,
        sig(report.h_ks_estimate),
        result.entropy.best,
        sig(report.lyapunov_positive_sum),
        sig(report.residual),
        sig(report.relative_residual),
    );
    out.text("pesin.txt", &summary)?;
    print!("{summary}");
    Ok(())
}
