//! Partition entropy, dynamical refinements `B(-n)` and finite-depth
//! estimates of the Kolmogorov–Sinai entropy.
//!
//! Cell measures are either computed exactly, by pushing polygons forward
//! through a piecewise-affine map, or estimated by Monte-Carlo symbol
//! statistics. Entropies use the natural logarithm and `0 ln 0 = 0`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PhasePoint, TorusMap};
use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::fit::fit_line;
use crate::geometry::{apply_pieces, region_area, AffinePiece, ConvexPolygon, Rect};

/// Tolerance on `sum(measures) == 1` accepted by [`partition_entropy`].
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Monte-Carlo depths with fewer samples per observed word than this are
/// left out of the entropy-rate fit: the plug-in entropy saturates at
/// `ln N` once the word count approaches the sample count.
pub const MIN_MEAN_COUNT: f64 = 3.0;

/// Default number of Monte-Carlo samples.
pub const DEFAULT_SAMPLES: usize = 1_000_000;

const MC_CHUNK: usize = 1 << 14;

/// Uniform `m_q x m_p` grid on the torus. Cell `k = i_q * m_p + i_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPartition {
    m_q: usize,
    m_p: usize,
}

impl GridPartition {
    pub fn new(m_q: usize, m_p: usize) -> Result<Self> {
        if m_q == 0 || m_p == 0 {
            return domain(format!("grid {m_q}x{m_p} has no cells"));
        }
        if m_q.checked_mul(m_p).map_or(true, |m| m > u32::MAX as usize) {
            return domain(format!("grid {m_q}x{m_p} is too large"));
        }
        Ok(GridPartition { m_q, m_p })
    }

    pub fn m_q(&self) -> usize {
        self.m_q
    }

    pub fn m_p(&self) -> usize {
        self.m_p
    }

    pub fn n_cells(&self) -> usize {
        self.m_q * self.m_p
    }

    pub fn index(&self, i_q: usize, i_p: usize) -> u32 {
        (i_q * self.m_p + i_p) as u32
    }

    pub fn cell_of(&self, x: PhasePoint) -> u32 {
        let iq = ((x.q() * self.m_q as f64) as usize).min(self.m_q - 1);
        let ip = ((x.p() * self.m_p as f64) as usize).min(self.m_p - 1);
        self.index(iq, ip)
    }

    pub fn cell_rect(&self, k: u32) -> Rect {
        let k = k as usize;
        let (iq, ip) = (k / self.m_p, k % self.m_p);
        Rect::new(
            iq as f64 / self.m_q as f64,
            (iq + 1) as f64 / self.m_q as f64,
            ip as f64 / self.m_p as f64,
            (ip + 1) as f64 / self.m_p as f64,
        )
    }
}

impl fmt::Display for GridPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m_q, self.m_p)
    }
}

impl FromStr for GridPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid `{s}` is not of the form <m_q>x<m_p>"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let m_q = a.trim().parse().map_err(|_| bad())?;
        let m_p = b.trim().parse().map_err(|_| bad())?;
        GridPartition::new(m_q, m_p)
    }
}

/// Symbol sequence `(k_0, ..., k_n)` naming the cell `∩_j T^{-j} A_{k_j}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellWord(Vec<u32>);

impl CellWord {
    pub fn new(symbols: Vec<u32>, n_cells: usize) -> Result<Self> {
        if symbols.is_empty() {
            return domain("a cell word needs at least one symbol");
        }
        if let Some(k) = symbols.iter().find(|&&k| k as usize >= n_cells) {
            return domain(format!("symbol {k} out of range for {n_cells} cells"));
        }
        Ok(CellWord(symbols))
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    /// Refinement depth `n` (the word has `n + 1` symbols).
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn prefix(&self, len: usize) -> CellWord {
        CellWord(self.0[..len].to_vec())
    }
}

impl fmt::Display for CellWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub method: MeasureMethod,
    pub stderr: f64,
    pub n_samples: usize,
}

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        MeasureEstimate {
            value,
            method: MeasureMethod::Exact,
            stderr: 0.0,
            n_samples: 0,
        }
    }

    pub fn monte_carlo(count: usize, n_samples: usize) -> Self {
        let value = count as f64 / n_samples as f64;
        MeasureEstimate {
            value,
            method: MeasureMethod::MonteCarlo,
            stderr: (value * (1.0 - value) / n_samples as f64).sqrt(),
            n_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Keep the per-word table in the records (memory heavy at depth).
    pub keep_words: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
            keep_words: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MeasureMode {
    Exact,
    MonteCarlo(McConfig),
}

/// The refined partition `B(-n)` at one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub n: usize,
    /// Number of words of positive measure, `R_n`.
    #[serde(rename = "R_n")]
    pub nonempty_words: usize,
    pub entropy: f64,
    pub method: MeasureMethod,
    pub n_samples: usize,
    #[serde(
        rename = "words",
        default,
        skip_serializing_if = "BTreeMap::is_empty",
        with = "word_table"
    )]
    pub word_measures: BTreeMap<CellWord, MeasureEstimate>,
}

mod word_table {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        word: Vec<u32>,
        value: f64,
        stderr: f64,
        method: MeasureMethod,
        n_samples: usize,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<CellWord, MeasureEstimate>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(w, m)| Entry {
            word: w.0.clone(),
            value: m.value,
            stderr: m.stderr,
            method: m.method,
            n_samples: m.n_samples,
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<CellWord, MeasureEstimate>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| {
                let m = MeasureEstimate {
                    value: e.value,
                    method: e.method,
                    stderr: e.stderr,
                    n_samples: e.n_samples,
                };
                (CellWord(e.word), m)
            })
            .collect())
    }
}

impl RefinementRecord {
    /// Mean number of samples per observed word (infinite for exact records).
    pub fn mean_count(&self) -> f64 {
        match self.method {
            MeasureMethod::Exact => f64::INFINITY,
            MeasureMethod::MonteCarlo => self.n_samples as f64 / self.nonempty_words.max(1) as f64,
        }
    }

    pub fn measure_sum(&self) -> f64 {
        self.word_measures.values().map(|m| m.value).sum()
    }
}

/// `-Σ m ln m` over the positive entries, in iteration order.
pub(crate) fn entropy_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    -values
        .into_iter()
        .filter(|&m| m > 0.0)
        .map(|m| m * m.ln())
        .sum::<f64>()
}

/// Shannon entropy of a partition's cell measures.
pub fn partition_entropy(measures: &[f64]) -> Result<f64> {
    if let Some(m) = measures.iter().find(|m| !(**m >= 0.0)) {
        return domain(format!("cell measure {m} is negative or not a number"));
    }
    let total: f64 = measures.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return domain(format!("cell measures sum to {total}, expected 1"));
    }
    Ok(entropy_sum(measures.iter().copied()))
}

/// Records for every depth `0..=n_max`, with the default execution policy.
pub fn refine_all(
    map: &TorusMap,
    grid: &GridPartition,
    n_max: usize,
    mode: &MeasureMode,
) -> Result<Vec<RefinementRecord>> {
    refine_all_with(map, grid, n_max, mode, Exec::default())
}

pub fn refine_all_with(
    map: &TorusMap,
    grid: &GridPartition,
    n_max: usize,
    mode: &MeasureMode,
    exec: Exec,
) -> Result<Vec<RefinementRecord>> {
    match mode {
        MeasureMode::Exact => refine_exact(map, grid, n_max, exec),
        MeasureMode::MonteCarlo(cfg) => refine_mc(map, grid, n_max, cfg, exec),
    }
}

/// The refinement `B(-n) = ∨_{j=0}^{n} T^{-j} Q`.
pub fn refine(
    map: &TorusMap,
    grid: &GridPartition,
    n: usize,
    mode: &MeasureMode,
) -> Result<RefinementRecord> {
    let mut all = refine_all(map, grid, n, mode)?;
    Ok(all.pop().expect("depth range is never empty"))
}

type Level = Vec<(CellWord, f64)>;

fn refine_exact(
    map: &TorusMap,
    grid: &GridPartition,
    n_max: usize,
    exec: Exec,
) -> Result<Vec<RefinementRecord>> {
    let pieces = map.forward_pieces()?;
    let per_root: Vec<Vec<Level>> = exec.map_range(grid.n_cells(), |k0| {
        let mut levels = vec![Vec::new(); n_max + 1];
        let region = vec![grid.cell_rect(k0 as u32).to_polygon()];
        let mut word = vec![k0 as u32];
        explore(&pieces, grid, region, &mut word, n_max, &mut levels);
        levels
    });

    let mut records = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let word_measures: BTreeMap<CellWord, MeasureEstimate> = per_root
            .iter()
            .flat_map(|levels| levels[n].iter())
            .map(|(w, a)| (w.clone(), MeasureEstimate::exact(*a)))
            .collect();
        let values: Vec<f64> = word_measures.values().map(|m| m.value).collect();
        let entropy = partition_entropy(&values)?;
        records.push(RefinementRecord {
            n,
            nonempty_words: word_measures.len(),
            entropy,
            method: MeasureMethod::Exact,
            n_samples: 0,
            word_measures,
        });
    }
    Ok(records)
}

// `region` is T^n(B(word)); its area is μ(B(word)) by measure preservation.
fn explore(
    pieces: &[AffinePiece],
    grid: &GridPartition,
    region: Vec<ConvexPolygon>,
    word: &mut Vec<u32>,
    n_max: usize,
    levels: &mut [Level],
) {
    let depth = word.len() - 1;
    levels[depth].push((CellWord(word.clone()), region_area(&region)));
    if depth == n_max {
        return;
    }
    let image = apply_pieces(pieces, &region);
    let mut children: BTreeMap<u32, Vec<ConvexPolygon>> = BTreeMap::new();
    for poly in &image {
        for (iq, ip, piece) in poly.split_grid(grid.m_q(), grid.m_p()) {
            children.entry(grid.index(iq, ip)).or_default().push(piece);
        }
    }
    for (k, sub) in children {
        word.push(k);
        explore(pieces, grid, sub, word, n_max, levels);
        word.pop();
    }
}

fn refine_mc(
    map: &TorusMap,
    grid: &GridPartition,
    n_max: usize,
    cfg: &McConfig,
    exec: Exec,
) -> Result<Vec<RefinementRecord>> {
    let n = cfg.n_samples;
    if n == 0 {
        return domain("Monte-Carlo mode needs at least one sample");
    }
    let len = n_max + 1;
    let n_chunks = n.div_ceil(MC_CHUNK);
    let chunks: Vec<Vec<u32>> = exec.map_range(n_chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let count = MC_CHUNK.min(n - c * MC_CHUNK);
        let mut symbols = Vec::with_capacity(count * len);
        for _ in 0..count {
            let mut x = PhasePoint::new(rng.gen::<f64>(), rng.gen::<f64>());
            for j in 0..len {
                symbols.push(grid.cell_of(x));
                if j + 1 < len {
                    x = map.step(x);
                }
            }
        }
        symbols
    });
    let flat: Vec<u32> = chunks.concat();
    let word = |i: usize| &flat[i * len..(i + 1) * len];

    let mut order: Vec<usize> = (0..n).collect();
    exec.sort_by(&mut order, |&a, &b| word(a).cmp(word(b)).then(a.cmp(&b)));

    // lcp[i]: common prefix length of sorted samples i-1 and i
    let lcp: Vec<usize> = (0..n)
        .map(|i| {
            if i == 0 {
                0
            } else {
                let (a, b) = (word(order[i - 1]), word(order[i]));
                a.iter().zip(b).take_while(|(x, y)| x == y).count()
            }
        })
        .collect();

    let mut records = Vec::with_capacity(len);
    for d in 0..len {
        let mut counts: Vec<(usize, usize)> = Vec::new(); // (first sorted index, count)
        for i in 0..n {
            if i == 0 || lcp[i] <= d {
                counts.push((i, 1));
            } else {
                counts.last_mut().expect("run opened at i == 0").1 += 1;
            }
        }
        let entropy = entropy_sum(counts.iter().map(|&(_, c)| c as f64 / n as f64));
        let word_measures = if cfg.keep_words {
            counts
                .iter()
                .map(|&(i, c)| {
                    let w = CellWord(word(order[i])[..=d].to_vec());
                    (w, MeasureEstimate::monte_carlo(c, n))
                })
                .collect()
        } else {
            BTreeMap::new()
        };
        records.push(RefinementRecord {
            n: d,
            nonempty_words: counts.len(),
            entropy,
            method: MeasureMethod::MonteCarlo,
            n_samples: n,
            word_measures,
        });
    }
    Ok(records)
}

/// Finite-depth estimate of the entropy production rate of a partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmuEstimate {
    /// Least-squares slope of `H(B(-n))` against `n` over the fit window.
    pub rate: f64,
    /// `H(B(-top)) / top`.
    pub ratio: f64,
    pub fit_start: usize,
    /// Deepest depth used; below the supplied `n_max` when Monte-Carlo
    /// depths were undersampled.
    pub fit_end: usize,
}

/// Slope estimate from an entropy profile `H(0), H(1), ..., H(top)`.
///
/// The window is the upper half `ceil(top/2) ..= top`.
pub fn entropy_rate(profile: &[f64]) -> Result<HmuEstimate> {
    if profile.len() < 3 {
        return domain(format!(
            "entropy profile has {} depths; at least 3 are needed for a rate",
            profile.len()
        ));
    }
    let top = profile.len() - 1;
    let start = top - top / 2;
    let xs: Vec<f64> = (start..=top).map(|n| n as f64).collect();
    let fit = fit_line(&xs, &profile[start..=top]).expect("window has two distinct depths");
    Ok(HmuEstimate {
        rate: fit.slope,
        ratio: profile[top] / top as f64,
        fit_start: start,
        fit_end: top,
    })
}

/// `h_μ(T, Q)` from the records `n = 0..=n_max` of one map and partition.
pub fn h_mu(records: &[RefinementRecord]) -> Result<HmuEstimate> {
    if records.len() < 5 {
        return domain(format!(
            "h_mu needs depths 0..=n_max with n_max >= 4, got {} records",
            records.len()
        ));
    }
    if let Some((i, r)) = records.iter().enumerate().find(|(i, r)| r.n != *i) {
        return domain(format!(
            "record {i} has depth {} (records must be 0..=n_max in order)",
            r.n
        ));
    }
    let usable = records
        .iter()
        .take_while(|r| r.mean_count() >= MIN_MEAN_COUNT)
        .count();
    if usable < 3 {
        return domain(format!(
            "only {usable} depths have at least {MIN_MEAN_COUNT} samples per word; raise the sample count"
        ));
    }
    let profile: Vec<f64> = records[..usable].iter().map(|r| r.entropy).collect();
    entropy_rate(&profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub grid: GridPartition,
    pub estimate: HmuEstimate,
    pub records: Vec<RefinementRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HksEstimate {
    pub value: f64,
    pub best: GridPartition,
    pub profile: Vec<LadderEntry>,
}

/// `h_KS` approximated by the largest `h_μ` over a ladder of grids.
pub fn hks_estimate(
    map: &TorusMap,
    ladder: &[GridPartition],
    n_max: usize,
    mode: &MeasureMode,
) -> Result<HksEstimate> {
    hks_estimate_with(map, ladder, n_max, mode, Exec::default())
}

pub fn hks_estimate_with(
    map: &TorusMap,
    ladder: &[GridPartition],
    n_max: usize,
    mode: &MeasureMode,
    exec: Exec,
) -> Result<HksEstimate> {
    if ladder.is_empty() {
        return domain("partition ladder is empty");
    }
    if let Some(w) = ladder.windows(2).find(|w| w[1].n_cells() <= w[0].n_cells()) {
        return domain(format!(
            "ladder must strictly increase in resolution ({} then {})",
            w[0], w[1]
        ));
    }
    let mut profile = Vec::with_capacity(ladder.len());
    for grid in ladder {
        let records = refine_all_with(map, grid, n_max, mode, exec)?;
        let estimate = h_mu(&records)?;
        profile.push(LadderEntry {
            grid: *grid,
            estimate,
            records,
        });
    }
    let best = profile.iter().enumerate().fold(0, |b, (i, e)| {
        if e.estimate.rate > profile[b].estimate.rate {
            i
        } else {
            b
        }
    });
    Ok(HksEstimate {
        value: profile[best].estimate.rate,
        best: profile[best].grid,
        profile,
    })
}
