use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pesinlab::gamow::{
    chain_prefix_traces, decay_bounds, evolve_matrix_oracle, evolve_operator, make_cell_operators,
    max_relative_deviation, BiorthOperator, CellGeneration, ChainResult, CoefficientTable,
    GamowSpec, RandomCells, ORACLE_MAX_DIM,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ln_bounds;
use crate::config::{resolve, usage, CommonArgs};
use crate::output::{full, sig, Output};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GamowArgs {
    /// [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    /// Time step [default: 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Basis truncation dimension [default: 32].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Number of cell operators [default: 4, or the number of tables in --cells-file].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// Scale of the random off-(0,0) coefficients [default: 0.001].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// JSON array of coefficient tables `{label, entries: [{r, s, re, im}]}` instead of random cells.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GamowConfig {
    pub spec: GamowSpec,
    pub cells: usize,
    pub generation: CellGeneration,
}

impl GamowArgs {
    pub fn resolve(&self, seed: u64) -> Result<GamowConfig> {
        let d = GamowSpec::default();
        let spec = GamowSpec {
            omega0: self.omega0.unwrap_or(d.omega0),
            gamma0: self.gamma0.unwrap_or(d.gamma0),
            hbar: self.hbar.unwrap_or(d.hbar),
            alpha: self.alpha.unwrap_or(d.alpha),
            n_max: self.truncation.unwrap_or(d.n_max),
        };
        spec.validate()?;
        let (generation, default_cells) = match &self.cells_file {
            Some(path) => {
                if self.coupling.is_some() {
                    return Err(usage(
                        "--coupling applies to random cells, not --cells-file",
                    ));
                }
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                let tables: Vec<CoefficientTable> = serde_json::from_str(&text)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                let n = tables.len();
                (CellGeneration::Prescribed { tables }, n)
            }
            None => (
                CellGeneration::Random(RandomCells {
                    seed,
                    coupling: self.coupling.unwrap_or(RandomCells::DEFAULT_COUPLING),
                    ratio: RandomCells::DEFAULT_RATIO,
                }),
                4,
            ),
        };
        Ok(GamowConfig {
            spec,
            cells: self.cells.unwrap_or(default_cells),
            generation,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GamowEvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gamow: GamowArgs,
    /// Chain length n; the word has n + 1 cells [default: 60].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Comma-separated cell indices k_0,...,k_n [default: seeded random word].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    /// Steps j = 0..=N checked against the dense matrix-exponential route [default: 10].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_steps: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Config {
    #[serde(flatten)]
    gamow: GamowConfig,
    depth: usize,
    word: Vec<u32>,
    oracle_steps: usize,
}

#[derive(Debug, Serialize)]
struct EvolveResult {
    cells: Vec<CoefficientTable>,
    bounds: (f64, f64),
    chain: Vec<ChainRow>,
    /// Largest off-(0,0) relative mass over the cells after j steps.
    off_origin_mass: Vec<f64>,
    /// Largest entrywise relative deviation from the dense route, when checked.
    oracle_deviation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ChainRow {
    #[serde(flatten)]
    chain: ChainResult,
    ln_bounds: (f64, f64),
}

fn parse_word(text: &str, cells: usize) -> Result<Vec<u32>> {
    text.split(',')
        .map(|t| {
            let k: u32 = t
                .trim()
                .parse()
                .map_err(|_| usage(format!("--word: `{t}` is not a cell index")))?;
            if k as usize >= cells {
                return Err(usage(format!(
                    "--word: cell {k} out of range for {cells} cells"
                )));
            }
            Ok(k)
        })
        .collect()
}

/// Seeded uniform word of `len` cells.
pub fn random_word(seed: u64, cells: usize, len: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(0..cells as u32)).collect()
}

pub fn run(common_args: &CommonArgs, args: &GamowEvolveArgs) -> Result<()> {
    let (common, args) = resolve(common_args, args)?;
    let gamow = args.gamow.resolve(common.seed)?;
    let depth = args.depth.unwrap_or(60);
    let word = match &args.word {
        Some(w) => {
            let w = parse_word(w, gamow.cells)?;
            if w.len() != depth + 1 && args.depth.is_some() {
                return Err(usage(format!(
                    "--word has {} cells but --depth {depth} needs {}",
                    w.len(),
                    depth + 1
                )));
            }
            w
        }
        None => random_word(common.seed, gamow.cells, depth + 1),
    };
    let depth = word.len() - 1;
    let cfg = Config {
        gamow,
        depth,
        word,
        oracle_steps: args.oracle_steps.unwrap_or(10),
    };
    let spec = &cfg.gamow.spec;

    let cells = make_cell_operators(spec, cfg.gamow.cells, &cfg.gamow.generation)?;
    let bounds = decay_bounds(&cells)?;
    let ops: Vec<&BiorthOperator> = cfg.word.iter().map(|&k| &cells[k as usize]).collect();
    let chain: Vec<ChainRow> = chain_prefix_traces(spec, &ops)?
        .into_iter()
        .map(|c| ChainRow {
            ln_bounds: ln_bounds(bounds, c.n),
            chain: c,
        })
        .collect();
    let off_origin_mass = (0..=depth)
        .map(|j| {
            cells
                .iter()
                .map(|c| evolve_operator(spec, c, j).off_origin_mass())
                .fold(0.0, f64::max)
        })
        .collect();
    let oracle_deviation = if spec.n_max <= ORACLE_MAX_DIM {
        let mut worst = 0.0f64;
        for j in 0..=cfg.oracle_steps {
            for c in &cells {
                let dense = evolve_matrix_oracle(spec, c, j)?;
                worst = worst.max(max_relative_deviation(
                    &evolve_operator(spec, c, j).coeffs,
                    &dense.coeffs,
                ));
            }
        }
        Some(worst)
    } else {
        None
    };
    let result = EvolveResult {
        cells: cells.iter().map(CoefficientTable::from_operator).collect(),
        bounds,
        chain,
        off_origin_mass,
        oracle_deviation,
    };

    let mut out = Output::new(&common)?;
    out.json("gamow-evolve", &common, &cfg, &result)?;
    let rows: Vec<Vec<String>> = result
        .chain
        .iter()
        .map(|r| {
            vec![
                r.chain.n.to_string(),
                full(r.chain.trace.re),
                full(r.chain.trace.im),
                full(r.chain.diagonal_product),
                full(r.chain.rel_error),
                full(r.ln_bounds.0),
                full(r.ln_bounds.1),
            ]
        })
        .collect();
    out.csv(
        "gamow-evolve.csv",
        &[
            "n",
            "re_trace",
            "im_trace",
            "diagonal_product",
            "rel_error",
            "ln_delta1_bound",
            "ln_delta2_bound",
        ],
        &rows,
    )?;

    let last = result.chain.last().expect("word is nonempty");
    let mut summary = format!(
        "t_R/alpha = {}, {} cells, delta1 = {}, delta2 = {}\n",
        sig(spec.relaxation_steps()),
        cells.len(),
        sig(bounds.0),
        sig(bounds.1)
    );
    summary.push_str(&format!(
        "n = {}: trace = {} {} {}i, product of alpha(0,0) = {}, relative error = {}\n",
        last.chain.n,
        sig(last.chain.trace.re),
        if last.chain.trace.im < 0.0 { "-" } else { "+" },
        sig(last.chain.trace.im.abs()),
        sig(last.chain.diagonal_product),
        sig(last.chain.rel_error),
    ));
    summary.push_str(&format!(
        "ln|trace| = {} in [{}, {}]\n",
        sig(last.chain.trace.norm().ln()),
        sig(last.ln_bounds.0),
        sig(last.ln_bounds.1)
    ));
    if let Some(d) = result.oracle_deviation {
        summary.push_str(&format!(
            "dense-exponential check (j <= {}): max deviation {}\n",
            cfg.oracle_steps,
            sig(d)
        ));
    }
    out.text("gamow-evolve.txt", &summary)?;
    print!("{summary}");
    Ok(())
}
