use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BiorthOperator, GamowSpec};
use crate::error::{domain, Result};

/// Total `α(0,0)` mass shared among randomly generated cells.
const RANDOM_ORIGIN_MASS: f64 = 0.95;
const NORMALIZATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub r: usize,
    pub s: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub label: String,
    pub entries: Vec<CoefficientEntry>,
}

impl CoefficientTable {
    /// Nonzero entries in row-major order.
    pub fn from_operator(op: &BiorthOperator) -> Self {
        let n = op.dim();
        let mut entries = Vec::new();
        for r in 0..n {
            for s in 0..n {
                let c = op.coeffs[(r, s)];
                if c.re != 0.0 || c.im != 0.0 {
                    entries.push(CoefficientEntry {
                        r,
                        s,
                        re: c.re,
                        im: c.im,
                    });
                }
            }
        }
        CoefficientTable {
            label: op.label.clone(),
            entries,
        }
    }

    pub fn to_operator(&self, n_max: usize) -> Result<BiorthOperator> {
        let mut m = DMatrix::zeros(n_max, n_max);
        for e in &self.entries {
            if e.r >= n_max || e.s >= n_max {
                return domain(format!(
                    "cell `{}` has entry ({}, {}) outside the truncation {n_max}",
                    self.label, e.r, e.s
                ));
            }
            if !e.re.is_finite() || !e.im.is_finite() {
                return domain(format!(
                    "cell `{}` has a non-finite entry at ({}, {})",
                    self.label, e.r, e.s
                ));
            }
            m[(e.r, e.s)] = Complex64::new(e.re, e.im);
        }
        BiorthOperator::new(m, self.label.clone())
    }
}

/// Seeded Hermitian coefficient matrices. The `(0,0)` entries split a total
/// mass of 0.95 with ±25% jitter; every other entry has magnitude at most
/// `coupling · ratio^(r+s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomCells {
    pub seed: u64,
    #[serde(default = "RandomCells::default_coupling")]
    pub coupling: f64,
    #[serde(default = "RandomCells::default_ratio")]
    pub ratio: f64,
}

impl RandomCells {
    pub const DEFAULT_COUPLING: f64 = 1e-3;
    pub const DEFAULT_RATIO: f64 = 0.5;

    pub fn new(seed: u64) -> Self {
        RandomCells {
            seed,
            coupling: Self::DEFAULT_COUPLING,
            ratio: Self::DEFAULT_RATIO,
        }
    }

    fn default_coupling() -> f64 {
        Self::DEFAULT_COUPLING
    }

    fn default_ratio() -> f64 {
        Self::DEFAULT_RATIO
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CellGeneration {
    Prescribed { tables: Vec<CoefficientTable> },
    Random(RandomCells),
}

pub fn make_cell_operators(
    spec: &GamowSpec,
    m: usize,
    generation: &CellGeneration,
) -> Result<Vec<BiorthOperator>> {
    spec.validate()?;
    if m < 2 {
        return domain(format!("need at least 2 cells, got {m}"));
    }
    let ops = match generation {
        CellGeneration::Prescribed { tables } => {
            if tables.len() != m {
                return domain(format!(
                    "{} coefficient tables given for {m} cells",
                    tables.len()
                ));
            }
            tables
                .iter()
                .map(|t| t.to_operator(spec.n_max))
                .collect::<Result<Vec<_>>>()?
        }
        CellGeneration::Random(params) => random_cells(spec.n_max, m, params)?,
    };
    let mut total = 0.0;
    for op in &ops {
        op.check_cell_indicator()?;
        total += op.origin().re;
    }
    if total > 1.0 + NORMALIZATION_SLACK {
        return domain(format!("cell α(0,0) values sum to {total} > 1"));
    }
    Ok(ops)
}

fn random_cells(n: usize, m: usize, params: &RandomCells) -> Result<Vec<BiorthOperator>> {
    if !(params.coupling >= 0.0 && params.coupling <= 1.0) {
        return domain(format!("coupling {} must lie in [0, 1]", params.coupling));
    }
    if !(params.ratio > 0.0 && params.ratio <= 1.0) {
        return domain(format!("ratio {} must lie in (0, 1]", params.ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.75..1.25)).collect();
    let wsum: f64 = weights.iter().sum();
    let mut ops = Vec::with_capacity(m);
    for (k, w) in weights.iter().enumerate() {
        let mut c = DMatrix::zeros(n, n);
        c[(0, 0)] = Complex64::new(RANDOM_ORIGIN_MASS * w / wsum, 0.0);
        for r in 0..n {
            for s in r..n {
                if r == 0 && s == 0 {
                    continue;
                }
                let bound = params.coupling * params.ratio.powi((r + s) as i32);
                if r == s {
                    c[(r, r)] = Complex64::new(bound * rng.gen::<f64>(), 0.0);
                } else {
                    let z = Complex64::from_polar(
                        bound * rng.gen::<f64>().sqrt(),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    );
                    c[(r, s)] = z;
                    c[(s, r)] = z.conj();
                }
            }
        }
        ops.push(BiorthOperator::new(c, format!("A{k}"))?);
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GamowSpec {
        GamowSpec::new(1.0, 0.1, 1.0, 1.0, 8).unwrap()
    }

    #[test]
    fn random_cells_are_reproducible_and_constrained() {
        let gen = CellGeneration::Random(RandomCells::new(7));
        let a = make_cell_operators(&spec(), 4, &gen).unwrap();
        let b = make_cell_operators(&spec(), 4, &gen).unwrap();
        assert_eq!(a, b);
        let sum: f64 = a.iter().map(|o| o.origin().re).sum();
        assert!(sum <= 1.0);
        for op in &a {
            assert!(op.origin().re > 0.0 && op.origin().re < 1.0);
            assert!((op.coeffs.adjoint() - &op.coeffs).norm() == 0.0);
            assert!(op.coeffs.iter().all(|z| z.norm() <= 1.0));
        }
        let other =
            make_cell_operators(&spec(), 4, &CellGeneration::Random(RandomCells::new(8))).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn prescribed_round_trip() {
        let ops =
            make_cell_operators(&spec(), 3, &CellGeneration::Random(RandomCells::new(1))).unwrap();
        let tables: Vec<_> = ops.iter().map(CoefficientTable::from_operator).collect();
        let back = make_cell_operators(
            &spec(),
            3,
            &CellGeneration::Prescribed {
                tables: tables.clone(),
            },
        )
        .unwrap();
        assert_eq!(back, ops);
        let again: Vec<_> = back.iter().map(CoefficientTable::from_operator).collect();
        assert_eq!(again, tables);
    }

    #[test]
    fn rejects_bad_tables() {
        let t = |a: f64| CoefficientTable {
            label: "x".into(),
            entries: vec![CoefficientEntry {
                r: 0,
                s: 0,
                re: a,
                im: 0.0,
            }],
        };
        let s = spec();
        let gen = |v: Vec<CoefficientTable>| CellGeneration::Prescribed { tables: v };
        assert!(make_cell_operators(&s, 2, &gen(vec![t(0.6), t(0.6)])).is_err());
        assert!(make_cell_operators(&s, 2, &gen(vec![t(0.5), t(0.0)])).is_err());
        assert!(make_cell_operators(&s, 2, &gen(vec![t(0.5)])).is_err());
        assert!(make_cell_operators(&s, 1, &gen(vec![t(0.5)])).is_err());
        let far = CoefficientTable {
            label: "far".into(),
            entries: vec![CoefficientEntry {
                r: 9,
                s: 0,
                re: 0.1,
                im: 0.0,
            }],
        };
        assert!(make_cell_operators(&s, 2, &gen(vec![t(0.5), far])).is_err());
        assert!(make_cell_operators(&s, 2, &gen(vec![t(0.5), t(0.5)])).is_ok());
    }
}
