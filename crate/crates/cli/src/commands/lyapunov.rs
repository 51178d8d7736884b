use anyhow::Result;
use clap::Args;
use pesinlab::dynamics::PhasePoint;
use pesinlab::lyapunov::{lyapunov_spectrum_with_transient, LyapunovSpectrum, DEFAULT_TRANSIENT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{exec, load_map};
use crate::config::{required, resolve, usage, CommonArgs};
use crate::output::{full, sig, Output};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LyapunovArgs {
    /// identity | baker | cat
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    /// Accumulated tangent-map steps per initial point [default: 10000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Number of seeded random initial points [default: 10].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Single initial point instead of random ones (needs --p0 too).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    /// Warm-up steps discarded before accumulating [default: 64].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Config {
    map: String,
    steps: usize,
    points: usize,
    q0: Option<f64>,
    p0: Option<f64>,
    transient: usize,
}

#[derive(Debug, Serialize)]
struct LyapunovResult {
    spectra: Vec<LyapunovSpectrum>,
    mean_exponents: Vec<f64>,
    mean_positive_sum: f64,
}

/// Seeded initial points, uniform on the torus.
pub fn initial_points(seed: u64, count: usize) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| PhasePoint::new(rng.gen(), rng.gen()))
        .collect()
}

pub fn run(common_args: &CommonArgs, args: &LyapunovArgs) -> Result<()> {
    let (common, args) = resolve(common_args, args)?;
    let cfg = Config {
        map: required(args.map, "map")?,
        steps: args.steps.unwrap_or(10_000),
        points: args.points.unwrap_or(10),
        q0: args.q0,
        p0: args.p0,
        transient: args.transient.unwrap_or(DEFAULT_TRANSIENT),
    };
    let map = load_map(&cfg.map)?;
    let starts = match (cfg.q0, cfg.p0) {
        (Some(q), Some(p)) => vec![PhasePoint::new(q, p)],
        (None, None) => {
            if cfg.points == 0 {
                return Err(usage("--points must be at least 1"));
            }
            initial_points(common.seed, cfg.points)
        }
        _ => return Err(usage("--q0 and --p0 must be given together")),
    };
    let spectra = exec(&common)
        .map_slice(&starts, |&x| {
            lyapunov_spectrum_with_transient(&map, x, cfg.steps, cfg.transient)
        })
        .into_iter()
        .collect::<pesinlab::Result<Vec<_>>>()?;
    let k = spectra.len() as f64;
    let mean_exponents = (0..2)
        .map(|i| spectra.iter().map(|s| s.exponents[i]).sum::<f64>() / k)
        .collect::<Vec<_>>();
    let mean_positive_sum = spectra.iter().map(|s| s.positive_sum).sum::<f64>() / k;
    let result = LyapunovResult {
        spectra,
        mean_exponents,
        mean_positive_sum,
    };

    let mut out = Output::new(&common)?;
    out.json("lyapunov", &common, &cfg, &result)?;
    let rows: Vec<Vec<String>> = result
        .spectra
        .iter()
        .map(|s| {
            vec![
                full(s.x0.q()),
                full(s.x0.p()),
                full(s.exponents[0]),
                full(s.exponents[1]),
                full(s.positive_sum),
            ]
        })
        .collect();
    out.csv(
        "lyapunov.csv",
        &["q0", "p0", "sigma1", "sigma2", "positive_sum"],
        &rows,
    )?;

    let summary = format!(
        "map {}: {} initial point(s), {} steps\nsigma_1 = {}\nsigma_2 = {}\npositive sum = {}\n",
        cfg.map,
        result.spectra.len(),
        cfg.steps,
        sig(result.mean_exponents[0]),
        sig(result.mean_exponents[1]),
        sig(result.mean_positive_sum),
    );
    out.text("lyapunov.txt", &summary)?;
    print!("{summary}");
    Ok(())
}
