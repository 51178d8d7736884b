//! The four-step prescription: set up cells, evolve them, trace ordered
//! products along words of growing length, and test those traces for
//! exponential decay. Exponential decay is only a sufficient condition for a
//! chaotic classical limit, so a negative outcome never means "regular".

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::make_map;
use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::fit::{fit_line, LineFit};
use crate::gamow::{
    chain_trace, decay_bounds, evolution_table, make_cell_operators, prefix_traces, BiorthOperator,
    CellGeneration, GamowSpec,
};
use crate::partition::{
    entropy_rate, entropy_sum, refine_all_with, CellWord, GridPartition, HmuEstimate, MeasureMode,
    RefinementRecord, SUM_TOLERANCE,
};

pub const DEFAULT_WORD_BUDGET: usize = 4096;
pub const DEFAULT_SAMPLE_WORDS: usize = 256;
pub const DEFAULT_R2_THRESHOLD: f64 = 0.99;
pub const MIN_DECAY_POINTS: usize = 8;
/// Slopes at or above this are treated as no decay.
pub const DECAY_SLOPE_FLOOR: f64 = -1e-3;
/// Relative imaginary part of a trace that gets flagged in the asymptotic regime.
pub const IMAG_FLAG_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Exponential,
    NotExponential,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    /// First `n` of the tail fit. Moved earlier if fewer than
    /// [`MIN_DECAY_POINTS`] values would remain.
    pub onset: usize,
    pub r2_threshold: f64,
}

impl DecayConfig {
    pub fn with_onset(onset: usize) -> Self {
        DecayConfig {
            onset,
            r2_threshold: DEFAULT_R2_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub values: Vec<(usize, f64)>,
    /// Slope of `ln magnitude` against `n` on the tail.
    pub fit_rate: f64,
    pub fit_intercept: f64,
    /// R² of the tail fit.
    pub fit_quality: f64,
    pub onset: usize,
    /// Residuals of the exponential and power-law models over every `n >= 1`.
    pub exponential_sse: f64,
    pub power_law_sse: f64,
    pub verdict: Verdict,
}

/// Classify a magnitude series as exponentially decaying or not.
///
/// The exponential model is fit on the tail `n >= onset`. It is rejected in
/// favour of a power law when `ln a` against `ln n` fits the whole series
/// (`n >= 1`) better than `ln a` against `n`.
pub fn decay_detect(values: &[(usize, f64)], cfg: &DecayConfig) -> Result<DecayReport> {
    if values.len() < MIN_DECAY_POINTS {
        return domain(format!(
            "decay detection needs at least {MIN_DECAY_POINTS} points, got {}",
            values.len()
        ));
    }
    if let Some((n, a)) = values.iter().find(|(_, a)| !(*a > 0.0) || !a.is_finite()) {
        return domain(format!(
            "magnitude at n = {n} is {a}; magnitudes must be positive"
        ));
    }
    if values.windows(2).any(|w| w[1].0 <= w[0].0) {
        return domain("decay series must be strictly increasing in n");
    }
    if !(cfg.r2_threshold > 0.0 && cfg.r2_threshold <= 1.0) {
        return domain(format!(
            "R² threshold {} must lie in (0, 1]",
            cfg.r2_threshold
        ));
    }

    let mut start = values
        .iter()
        .position(|(n, _)| *n >= cfg.onset)
        .unwrap_or(values.len());
    start = start.min(values.len() - MIN_DECAY_POINTS);
    let tail = &values[start..];
    let tail_fit = log_fit(tail, |n| n as f64);

    let full: Vec<(usize, f64)> = values.iter().copied().filter(|(n, _)| *n >= 1).collect();
    let exp_fit = log_fit(&full, |n| n as f64);
    let pow_fit = log_fit(&full, |n| (n as f64).ln());

    let verdict = if tail_fit.slope >= DECAY_SLOPE_FLOOR || pow_fit.sse < exp_fit.sse {
        Verdict::NotExponential
    } else if tail_fit.r2 >= cfg.r2_threshold {
        Verdict::Exponential
    } else {
        Verdict::Inconclusive
    };
    Ok(DecayReport {
        values: values.to_vec(),
        fit_rate: tail_fit.slope,
        fit_intercept: tail_fit.intercept,
        fit_quality: tail_fit.r2,
        onset: tail[0].0,
        exponential_sse: exp_fit.sse,
        power_law_sse: pow_fit.sse,
        verdict,
    })
}

fn log_fit(values: &[(usize, f64)], x: impl Fn(usize) -> f64) -> LineFit {
    let xs: Vec<f64> = values.iter().map(|(n, _)| x(*n)).collect();
    let ys: Vec<f64> = values.iter().map(|(_, a)| a.ln()).collect();
    fit_line(&xs, &ys).expect("at least two distinct n")
}

/// `μ(B(word))` as the magnitude of the trace of the evolved cell-operator chain.
pub fn mu_via_quantum(spec: &GamowSpec, cells: &[BiorthOperator], word: &CellWord) -> Result<f64> {
    if let Some(k) = word.symbols().iter().find(|&&k| k as usize >= cells.len()) {
        return domain(format!("symbol {k} out of range for {} cells", cells.len()));
    }
    let ops: Vec<&BiorthOperator> = word.symbols().iter().map(|&k| &cells[k as usize]).collect();
    Ok(chain_trace(spec, &ops, ops.len() - 1)?.trace.norm())
}

/// `-Σ μ ln μ` over one depth of word measures, keeping the given order.
pub fn semiclassical_entropy(measures: &[f64]) -> Result<f64> {
    if let Some(m) = measures.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return domain(format!("word measure {m} is negative or not finite"));
    }
    let total: f64 = measures.iter().sum();
    if total > 1.0 + SUM_TOLERANCE {
        return domain(format!("word measures sum to {total} > 1"));
    }
    Ok(entropy_sum(measures.iter().copied()))
}

/// Entropy-rate estimate from word measures at depths `0, 1, ..., top`.
pub fn semiclassical_h_mu(per_depth: &[Vec<f64>]) -> Result<HmuEstimate> {
    let profile = per_depth
        .iter()
        .map(|m| semiclassical_entropy(m))
        .collect::<Result<Vec<_>>>()?;
    entropy_rate(&profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum Source {
    Classical {
        map: String,
        grid: GridPartition,
        mode: MeasureMode,
    },
    Quantum {
        spec: GamowSpec,
        cells: usize,
        generation: CellGeneration,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Deepest word index `n`; words have length `depth + 1`.
    pub depth: usize,
    pub word_budget: usize,
    pub sample_words: usize,
    pub seed: u64,
    pub r2_threshold: f64,
    /// Overrides the default fit onset.
    pub onset: Option<usize>,
}

impl RunConfig {
    pub fn new(depth: usize, seed: u64) -> Self {
        RunConfig {
            depth,
            word_budget: DEFAULT_WORD_BUDGET,
            sample_words: DEFAULT_SAMPLE_WORDS,
            seed,
            r2_threshold: DEFAULT_R2_THRESHOLD,
            onset: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordRegime {
    Enumerated,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTrace {
    pub word: Vec<u32>,
    /// `μ` of each prefix, `n = 0..=depth`.
    pub magnitudes: Vec<f64>,
    /// `Im trace / |trace|` per prefix (quantum sources only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub imag_ratio: Vec<f64>,
    pub fit_rate: f64,
    pub fit_quality: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrescriptionRun {
    pub source: Source,
    pub config: RunConfig,
    pub regime: WordRegime,
    /// `R_n` per depth; `None` once it no longer fits in 64 bits.
    pub nonempty_words: Vec<Option<u64>>,
    pub words: Vec<WordTrace>,
    /// `H(B(-n))` from the word measures, for the depths where every word was computed.
    pub entropy_profile: Vec<f64>,
    pub semiclassical_h_mu: Option<HmuEstimate>,
    /// Decay of the geometric-mean magnitude over the words.
    pub report: DecayReport,
    pub fraction_passing: f64,
    /// `(δ₁, δ₂)` over the cell operators (quantum sources only).
    pub bounds: Option<(f64, f64)>,
    /// `fit_rate / (γ₀ α / ħ)` (quantum sources only).
    pub rate_in_gamma_units: Option<f64>,
    /// Largest `|Im trace| / |trace|` at or beyond the fit onset.
    pub max_imag_ratio: Option<f64>,
    pub imag_flagged: bool,
    pub chaotic: bool,
}

pub fn prescription_run(source: &Source, config: &RunConfig) -> Result<PrescriptionRun> {
    prescription_run_with(source, config, Exec::default())
}

pub fn prescription_run_with(
    source: &Source,
    config: &RunConfig,
    exec: Exec,
) -> Result<PrescriptionRun> {
    if config.depth + 1 < MIN_DECAY_POINTS {
        return domain(format!(
            "depth {} gives fewer than {MIN_DECAY_POINTS} points for the decay fit",
            config.depth
        ));
    }
    if config.sample_words == 0 {
        return domain("sample_words must be positive");
    }
    match source {
        Source::Classical { map, grid, mode } => {
            classical_run(source, config, map, grid, mode, exec)
        }
        Source::Quantum {
            spec,
            cells,
            generation,
        } => quantum_run(source, config, spec, *cells, generation, exec),
    }
}

struct Collected {
    regime: WordRegime,
    nonempty_words: Vec<Option<u64>>,
    words: Vec<(Vec<u32>, Vec<f64>, Vec<f64>)>,
    entropy_profile: Vec<f64>,
    semiclassical_h_mu: Option<HmuEstimate>,
    bounds: Option<(f64, f64)>,
    gamma_rate: Option<f64>,
}

fn classical_run(
    source: &Source,
    config: &RunConfig,
    map: &str,
    grid: &GridPartition,
    mode: &MeasureMode,
    exec: Exec,
) -> Result<PrescriptionRun> {
    let map = make_map(map)?;
    let mode = match mode {
        MeasureMode::MonteCarlo(cfg) => MeasureMode::MonteCarlo(crate::partition::McConfig {
            keep_words: true,
            ..*cfg
        }),
        m => *m,
    };
    let records = refine_all_with(&map, grid, config.depth, &mode, exec)?;
    let per_depth: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.word_measures.values().map(|m| m.value).collect())
        .collect();
    let entropy_profile = per_depth
        .iter()
        .map(|m| semiclassical_entropy(m))
        .collect::<Result<Vec<_>>>()?;
    let semiclassical_h_mu = Some(entropy_rate(&entropy_profile)?);

    let last = records.last().expect("depth + 1 records");
    let candidates: Vec<&CellWord> = last.word_measures.keys().collect();
    let (regime, chosen) = choose_indices(candidates.len(), config);
    let words = exec.map_slice(&chosen, |&i| {
        let word = candidates[i];
        (
            word.symbols().to_vec(),
            prefix_measures(&records, word),
            Vec::new(),
        )
    });
    let collected = Collected {
        regime,
        nonempty_words: records
            .iter()
            .map(|r| Some(r.nonempty_words as u64))
            .collect(),
        words,
        entropy_profile,
        semiclassical_h_mu,
        bounds: None,
        gamma_rate: None,
    };
    finish(
        source,
        config,
        config.onset.unwrap_or(config.depth / 2),
        collected,
    )
}

fn prefix_measures(records: &[RefinementRecord], word: &CellWord) -> Vec<f64> {
    (0..=word.depth())
        .map(|n| records[n].word_measures[&word.prefix(n + 1)].value)
        .collect()
}

fn choose_indices(available: usize, config: &RunConfig) -> (WordRegime, Vec<usize>) {
    if available <= config.word_budget {
        return (WordRegime::Enumerated, (0..available).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picked =
        index::sample(&mut rng, available, config.sample_words.min(available)).into_vec();
    picked.sort_unstable();
    (WordRegime::Sampled, picked)
}

fn quantum_run(
    source: &Source,
    config: &RunConfig,
    spec: &GamowSpec,
    m: usize,
    generation: &CellGeneration,
    exec: Exec,
) -> Result<PrescriptionRun> {
    let cells = make_cell_operators(spec, m, generation)?;
    let bounds = decay_bounds(&cells)?;
    let table = evolution_table(spec, &cells, config.depth)?;
    let origins: Vec<f64> = cells.iter().map(|c| c.origin().re).collect();

    let nonempty_words: Vec<Option<u64>> = (0..=config.depth)
        .map(|n| (m as u64).checked_pow(n as u32 + 1))
        .collect();
    let fits_budget = |n: usize| nonempty_words[n].is_some_and(|r| r <= config.word_budget as u64);

    // Full enumeration of the shallow depths feeds the entropy profile.
    let enum_depth = (0..=config.depth).take_while(|&n| fits_budget(n)).last();
    let mut entropy_profile = Vec::new();
    if let Some(top) = enum_depth {
        let per_depth = enumerate_measures(&table, m, top);
        entropy_profile = per_depth
            .iter()
            .map(|v| semiclassical_entropy(v))
            .collect::<Result<Vec<_>>>()?;
    }
    let semiclassical_h_mu = if entropy_profile.len() >= 3 {
        Some(entropy_rate(&entropy_profile)?)
    } else {
        None
    };

    let (regime, words) = if fits_budget(config.depth) {
        let total = nonempty_words[config.depth].expect("fits budget") as usize;
        (
            WordRegime::Enumerated,
            (0..total)
                .map(|i| word_from_index(i, m, config.depth + 1))
                .collect(),
        )
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let words: Vec<Vec<u32>> = (0..config.sample_words)
            .map(|_| {
                (0..=config.depth)
                    .map(|_| rng.gen_range(0..m as u32))
                    .collect()
            })
            .collect();
        (WordRegime::Sampled, words)
    };

    let traced = exec.map_slice(&words, |word| {
        let mats: Vec<_> = word
            .iter()
            .enumerate()
            .map(|(j, &k)| &table[j][k as usize].coeffs)
            .collect();
        let ws: Vec<f64> = word.iter().map(|&k| origins[k as usize]).collect();
        let chain = prefix_traces(&mats, &ws);
        let mags = chain.iter().map(|c| c.trace.norm()).collect();
        let imag = chain.iter().map(|c| c.trace.im / c.trace.norm()).collect();
        (word.clone(), mags, imag)
    });

    let default_onset = (config.depth / 2).max((10.0 * spec.relaxation_steps()).ceil() as usize);
    let collected = Collected {
        regime,
        nonempty_words,
        words: traced,
        entropy_profile,
        semiclassical_h_mu,
        bounds: Some(bounds),
        gamma_rate: Some(spec.gamma0 * spec.alpha / spec.hbar),
    };
    finish(
        source,
        config,
        config.onset.unwrap_or(default_onset),
        collected,
    )
}

fn word_from_index(mut i: usize, m: usize, len: usize) -> Vec<u32> {
    let mut w = vec![0u32; len];
    for slot in w.iter_mut().rev() {
        *slot = (i % m) as u32;
        i /= m;
    }
    w
}

/// `|trace|` of every word at depths `0..=top`, lexicographic within each depth.
fn enumerate_measures(table: &[Vec<BiorthOperator>], m: usize, top: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); top + 1];
    // children pushed in reverse so the depth-first walk visits words lexicographically
    let mut stack: Vec<(usize, DMatrix<Complex64>)> = (0..m)
        .rev()
        .map(|k| (0, table[0][k].coeffs.clone()))
        .collect();
    while let Some((j, prod)) = stack.pop() {
        out[j].push(prod.trace().norm());
        if j < top {
            for k in (0..m).rev() {
                stack.push((j + 1, &prod * &table[j + 1][k].coeffs));
            }
        }
    }
    out
}

fn finish(
    source: &Source,
    config: &RunConfig,
    onset: usize,
    c: Collected,
) -> Result<PrescriptionRun> {
    let decay_cfg = DecayConfig {
        onset,
        r2_threshold: config.r2_threshold,
    };
    let mut words = Vec::with_capacity(c.words.len());
    for (word, magnitudes, imag_ratio) in c.words {
        let series: Vec<(usize, f64)> = magnitudes.iter().copied().enumerate().collect();
        let r = decay_detect(&series, &decay_cfg)?;
        words.push(WordTrace {
            word,
            magnitudes,
            imag_ratio,
            fit_rate: r.fit_rate,
            fit_quality: r.fit_quality,
            verdict: r.verdict,
        });
    }
    let n_words = words.len() as f64;
    let mean: Vec<(usize, f64)> = (0..=config.depth)
        .map(|n| {
            (
                n,
                (words.iter().map(|w| w.magnitudes[n].ln()).sum::<f64>() / n_words).exp(),
            )
        })
        .collect();
    let report = decay_detect(&mean, &decay_cfg)?;
    let passing = words
        .iter()
        .filter(|w| w.verdict == Verdict::Exponential)
        .count();
    let fraction_passing = passing as f64 / n_words;

    let max_imag_ratio = if words.iter().any(|w| !w.imag_ratio.is_empty()) {
        Some(
            words
                .iter()
                .flat_map(|w| w.imag_ratio[report.onset..].iter())
                .fold(0.0f64, |a, r| a.max(r.abs())),
        )
    } else {
        None
    };
    let chaotic = report.verdict == Verdict::Exponential && passing == words.len();
    Ok(PrescriptionRun {
        source: source.clone(),
        config: *config,
        regime: c.regime,
        nonempty_words: c.nonempty_words,
        words,
        entropy_profile: c.entropy_profile,
        semiclassical_h_mu: c.semiclassical_h_mu,
        rate_in_gamma_units: c.gamma_rate.map(|g| report.fit_rate / g),
        report,
        fraction_passing,
        bounds: c.bounds,
        imag_flagged: max_imag_ratio.is_some_and(|r| r > IMAG_FLAG_RATIO),
        max_imag_ratio,
        chaotic,
    })
}
