use anyhow::Result;
use clap::{Args, ValueEnum};
use pesinlab::partition::{GridPartition, DEFAULT_SAMPLES};
use pesinlab::pipeline::{prescription_run_with, PrescriptionRun, RunConfig, Source, WordRegime};
use serde::{Deserialize, Serialize};

use super::gamow_evolve::GamowArgs;
use super::{exec, ln_bounds, measure_mode, ModeKind};
use crate::config::{required, resolve, usage, CommonArgs};
use crate::output::{full, sig, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Gamow,
    Classical,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PrescriptionArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceKind>,
    /// Longest word index n [default: 80 gamow, 12 classical].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Classical map: identity | baker | cat
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    /// Classical partition grid [default: 2x1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Classical word measures [default: exact].
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub gamow: GamowArgs,
    /// Words are enumerated while their number stays within this budget [default: 4096].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_budget: Option<usize>,
    /// Words sampled beyond the budget [default: 256].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_words: Option<usize>,
    /// First n of the decay fit [default: depth/2, at least 10 t_R/alpha for gamow].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub onset: Option<usize>,
    /// R² needed for an exponential verdict [default: 0.99].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_threshold: Option<f64>,
}

/// Run settings echoed next to the common ones (which already carry the seed).
#[derive(Serialize)]
struct Echo<'a> {
    source: &'a Source,
    depth: usize,
    word_budget: usize,
    sample_words: usize,
    r2_threshold: f64,
    onset: Option<usize>,
}

const PLOT_SCRIPT: &str = "\
# ln of the mean word measure against n, with the exponential fit and the
# (n+1) ln delta band where available. Reads prescription.csv only.
set datafile separator ','
set key top right
set xlabel 'n'
set ylabel 'ln mu'
plot 'prescription.csv' using 1:4 skip 1 with points title 'ln mean measure', \\
     '' using 1:5 skip 1 with lines title 'fit', \\
     '' using 1:6 skip 1 with lines dashtype 2 title 'ln delta1 bound', \\
     '' using 1:7 skip 1 with lines dashtype 2 title 'ln delta2 bound'
";

fn source_from(args: &PrescriptionArgs, seed: u64) -> Result<Source> {
    let kind = required(args.source, "source")?;
    let classical_only =
        args.map.is_some() || args.grid.is_some() || args.mode.is_some() || args.samples.is_some();
    match kind {
        SourceKind::Classical => {
            let grid: GridPartition = args
                .grid
                .as_deref()
                .unwrap_or("2x1")
                .parse()
                .map_err(|e| usage(format!("--grid: {e}")))?;
            let mode = args.mode.unwrap_or(ModeKind::Exact);
            let samples = (mode == ModeKind::Mc).then(|| args.samples.unwrap_or(DEFAULT_SAMPLES));
            Ok(Source::Classical {
                map: required(args.map.clone(), "map")?,
                grid,
                mode: measure_mode(mode, samples, seed),
            })
        }
        SourceKind::Gamow => {
            if classical_only {
                return Err(usage(
                    "--map, --grid, --mode and --samples apply to --source classical",
                ));
            }
            let g = args.gamow.resolve(seed)?;
            Ok(Source::Quantum {
                spec: g.spec,
                cells: g.cells,
                generation: g.generation,
            })
        }
    }
}

pub fn run(common_args: &CommonArgs, args: &PrescriptionArgs) -> Result<()> {
    let (common, args) = resolve(common_args, args)?;
    let source = source_from(&args, common.seed)?;
    let default_depth = match source {
        Source::Quantum { .. } => 80,
        Source::Classical { .. } => 12,
    };
    let d = RunConfig::new(args.depth.unwrap_or(default_depth), common.seed);
    let cfg = RunConfig {
        word_budget: args.word_budget.unwrap_or(d.word_budget),
        sample_words: args.sample_words.unwrap_or(d.sample_words),
        r2_threshold: args.r2_threshold.unwrap_or(d.r2_threshold),
        onset: args.onset,
        ..d
    };
    if let Source::Classical { map, .. } = &source {
        pesinlab::dynamics::make_map(map)?;
    }
    let run = prescription_run_with(&source, &cfg, exec(&common))?;

    let mut out = Output::new(&common)?;
    out.json(
        "prescription",
        &common,
        &Echo {
            source: &source,
            depth: cfg.depth,
            word_budget: cfg.word_budget,
            sample_words: cfg.sample_words,
            r2_threshold: cfg.r2_threshold,
            onset: cfg.onset,
        },
        &run,
    )?;
    if out.wants_csv() {
        out.csv(
            "prescription.csv",
            &[
                "n",
                "entropy",
                "mean_measure",
                "ln_mean_measure",
                "ln_fit",
                "ln_delta1_bound",
                "ln_delta2_bound",
            ],
            &csv_rows(&run),
        )?;
        let word_rows: Vec<Vec<String>> = run
            .words
            .iter()
            .map(|w| {
                let word: Vec<String> = w.word.iter().map(|k| k.to_string()).collect();
                vec![
                    word.join(" "),
                    full(w.fit_rate),
                    full(w.fit_quality),
                    verdict_name(w.verdict).into(),
                ]
            })
            .collect();
        out.csv(
            "prescription_words.csv",
            &["word", "fit_rate", "fit_quality", "verdict"],
            &word_rows,
        )?;
        out.text("prescription_decay.gp", PLOT_SCRIPT)?;
    }

    let summary = summary(&run);
    out.text("prescription.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn verdict_name(v: pesinlab::pipeline::Verdict) -> &'static str {
    use pesinlab::pipeline::Verdict::*;
    match v {
        Exponential => "exponential",
        NotExponential => "not_exponential",
        Inconclusive => "inconclusive",
    }
}

fn csv_rows(run: &PrescriptionRun) -> Vec<Vec<String>> {
    let r = &run.report;
    r.values
        .iter()
        .map(|&(n, m)| {
            let opt = |x: Option<f64>| x.map(full).unwrap_or_default();
            let bounds = run.bounds.map(|b| ln_bounds(b, n));
            vec![
                n.to_string(),
                opt(run.entropy_profile.get(n).copied()),
                full(m),
                full(m.ln()),
                opt((n >= r.onset).then(|| r.fit_intercept + r.fit_rate * n as f64)),
                opt(bounds.map(|b| b.0)),
                opt(bounds.map(|b| b.1)),
            ]
        })
        .collect()
}

fn summary(run: &PrescriptionRun) -> String {
    let r = &run.report;
    let mut s = String::new();
    s.push_str(
        match &run.source {
            Source::Classical { map, grid, .. } => {
                format!("classical source: map {map}, grid {grid}\n")
            }
            Source::Quantum { spec, cells, .. } => format!(
                "gamow source: omega0 {}, gamma0 {}, hbar {}, alpha {}, {} cells, t_R/alpha = {}\n",
                sig(spec.omega0),
                sig(spec.gamma0),
                sig(spec.hbar),
                sig(spec.alpha),
                cells,
                sig(spec.relaxation_steps())
            ),
        }
        .as_str(),
    );
    s.push_str(&format!(
        "depth {}, {} words ({})\n",
        run.config.depth,
        run.words.len(),
        match run.regime {
            WordRegime::Enumerated => "all enumerated",
            WordRegime::Sampled => "sampled",
        }
    ));
    s.push_str(&format!(
        "decay fit n >= {}: rate = {}, R^2 = {}, verdict {}\n",
        r.onset,
        sig(r.fit_rate),
        sig(r.fit_quality),
        verdict_name(r.verdict)
    ));
    if let Some(g) = run.rate_in_gamma_units {
        s.push_str(&format!("rate / (gamma0 alpha / hbar) = {}\n", sig(g)));
    }
    s.push_str(&format!("words passing: {}\n", sig(run.fraction_passing)));
    if let Some(h) = &run.semiclassical_h_mu {
        s.push_str(&format!(
            "semiclassical h_mu = {} (n = {}..{})\n",
            sig(h.rate),
            h.fit_start,
            h.fit_end
        ));
    }
    if let Some((d1, d2)) = run.bounds {
        s.push_str(&format!("delta1 = {}, delta2 = {}\n", sig(d1), sig(d2)));
    }
    if let Some(im) = run.max_imag_ratio {
        s.push_str(&format!(
            "max |Im trace|/|trace| past onset = {}{}\n",
            sig(im),
            if run.imag_flagged { " (flagged)" } else { "" }
        ));
    }
    s.push_str(if run.chaotic {
        "CHAOTIC (sufficient condition met)\n"
    } else {
        "NOT PROVEN CHAOTIC\n"
    });
    s
}
