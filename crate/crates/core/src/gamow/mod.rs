//! Gamow-type open oscillator: a non-Hermitian effective Hamiltonian with
//! eigenvalues `z_0 = ω₀`, `z_n = n(ω₀ − iγ₀)`, acting on operators written in
//! its bi-orthogonal basis `|r⟩⟨s̃|`.
//!
//! In that basis an operator is just its coefficient matrix `α(r, s)`:
//! products of operators are matrix products and the pairing `(Â | Î)` is
//! the ordinary trace.

mod cells;
pub mod expm;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use cells::{
    make_cell_operators, CellGeneration, CoefficientEntry, CoefficientTable, RandomCells,
};

/// Largest truncation the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 200;

pub const DEFAULT_TRUNCATION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GamowSpec {
    pub omega0: f64,
    pub gamma0: f64,
    pub hbar: f64,
    /// Time step of the discretised evolution `U(j) = exp(−i H α j / ħ)`.
    pub alpha: f64,
    /// Truncation dimension of the bi-orthogonal basis.
    pub n_max: usize,
}

impl Default for GamowSpec {
    fn default() -> Self {
        GamowSpec {
            omega0: 1.0,
            gamma0: 0.1,
            hbar: 1.0,
            alpha: 1.0,
            n_max: DEFAULT_TRUNCATION,
        }
    }
}

impl GamowSpec {
    pub fn new(omega0: f64, gamma0: f64, hbar: f64, alpha: f64, n_max: usize) -> Result<Self> {
        let spec = GamowSpec {
            omega0,
            gamma0,
            hbar,
            alpha,
            n_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega0", self.omega0),
            ("gamma0", self.gamma0),
            ("hbar", self.hbar),
            ("alpha", self.alpha),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("{name} = {v} must be finite and positive"));
            }
        }
        if self.n_max < 2 {
            return domain(format!(
                "truncation n_max = {} must be at least 2",
                self.n_max
            ));
        }
        Ok(())
    }

    /// Decoherence time `t_R = ħ / γ₀`.
    pub fn t_r(&self) -> f64 {
        self.hbar / self.gamma0
    }

    /// Relaxation time in units of steps, `t_R / α`.
    pub fn relaxation_steps(&self) -> f64 {
        self.t_r() / self.alpha
    }

    pub fn eigenvalues(&self) -> Eigenvalues {
        let z = (0..self.n_max)
            .map(|n| {
                if n == 0 {
                    Complex64::new(self.omega0, 0.0)
                } else {
                    Complex64::new(self.omega0, -self.gamma0) * n as f64
                }
            })
            .collect();
        Eigenvalues { z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalues {
    pub z: Vec<Complex64>,
}

/// `Σ α(r, s) |r⟩⟨s̃|`, truncated to `n_max x n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthOperator {
    pub coeffs: DMatrix<Complex64>,
    pub label: String,
}

impl BiorthOperator {
    pub fn new(coeffs: DMatrix<Complex64>, label: impl Into<String>) -> Result<Self> {
        if !coeffs.is_square() {
            return domain(format!(
                "coefficient matrix is {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            ));
        }
        Ok(BiorthOperator {
            coeffs,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn origin(&self) -> Complex64 {
        self.coeffs[(0, 0)]
    }

    /// Frobenius norm of every coefficient except `α(0,0)`, divided by `|α(0,0)|`.
    pub fn off_origin_mass(&self) -> f64 {
        let n = self.dim();
        let rest: f64 = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|&rc| rc != (0, 0))
            .map(|rc| self.coeffs[rc].norm_sqr())
            .sum();
        rest.sqrt() / self.origin().norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.coeffs.trace()
    }

    /// `0 < α(0,0) < 1` with zero imaginary part.
    pub fn check_cell_indicator(&self) -> Result<()> {
        let a = self.origin();
        if !(a.re > 0.0 && a.re < 1.0) || a.im != 0.0 {
            return domain(format!(
                "cell `{}` has α(0,0) = {a}; a cell indicator needs 0 < α(0,0) < 1 (real)",
                self.label
            ));
        }
        Ok(())
    }
}

/// Closed-form evolution `α(p,q) ↦ α(p,q) exp(−i z_p αj/ħ) exp(i z_q* αj/ħ)`.
pub fn evolve_operator(spec: &GamowSpec, op: &BiorthOperator, j: usize) -> BiorthOperator {
    let z = spec.eigenvalues().z;
    let t = spec.alpha * j as f64 / spec.hbar;
    let dim = op.dim().min(z.len());
    let mut coeffs = op.coeffs.clone();
    for p in 0..dim {
        for q in 0..dim {
            // exp(−i (z_p − z_q*) t); the exponent vanishes exactly at (0,0)
            let w = (z[p] - z[q].conj()) * Complex64::new(0.0, -t);
            coeffs[(p, q)] *= w.exp();
        }
    }
    BiorthOperator {
        coeffs,
        label: op.label.clone(),
    }
}

/// Independent route: `U(j) A U(j)†` with `U(j) = exp(−i H αj/ħ)` and
/// `U(j)† = exp(i H† αj/ħ)`, both from dense matrix exponentials of the
/// Hamiltonian's coefficient matrix.
pub fn evolve_matrix_oracle(
    spec: &GamowSpec,
    op: &BiorthOperator,
    j: usize,
) -> Result<BiorthOperator> {
    let n = op.dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::Resource(format!(
            "dense oracle limited to dimension {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    if n != spec.n_max {
        return domain(format!(
            "operator dimension {n} differs from truncation {}",
            spec.n_max
        ));
    }
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spec.eigenvalues().z));
    let t = spec.alpha * j as f64 / spec.hbar;
    let u = expm::expm(&h.map(|z| z * Complex64::new(0.0, -t)));
    let u_dag = expm::expm(&h.adjoint().map(|z| z * Complex64::new(0.0, t)));
    Ok(BiorthOperator {
        coeffs: u * &op.coeffs * u_dag,
        label: op.label.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub n: usize,
    /// `(∏_{j=0}^{n} Î(j) | Î)`
    pub trace: Complex64,
    /// `∏_j α_j(0,0)` (real parts).
    pub diagonal_product: f64,
    pub rel_error: f64,
}

impl ChainResult {
    fn new(n: usize, trace: Complex64, diagonal_product: f64) -> Self {
        let rel_error = (trace - diagonal_product).norm() / diagonal_product.abs();
        ChainResult {
            n,
            trace,
            diagonal_product,
            rel_error,
        }
    }
}

fn check_dims(spec: &GamowSpec, ops: &[&BiorthOperator]) -> Result<()> {
    if let Some(op) = ops.iter().find(|op| op.dim() != spec.n_max) {
        return domain(format!(
            "operator `{}` has dimension {} but the truncation is {}",
            op.label,
            op.dim(),
            spec.n_max
        ));
    }
    Ok(())
}

/// Trace of `Î_{k_0}(0) Î_{k_1}(1) ⋯ Î_{k_n}(n)`, ascending `j` left to right.
pub fn chain_trace(spec: &GamowSpec, ops: &[&BiorthOperator], n: usize) -> Result<ChainResult> {
    if ops.len() != n + 1 {
        return domain(format!(
            "chain of length n = {n} needs {} operators, got {}",
            n + 1,
            ops.len()
        ));
    }
    Ok(*chain_prefix_traces(spec, ops)?
        .last()
        .expect("n + 1 >= 1 operators"))
}

/// [`ChainResult`] for every prefix `k_0 ⋯ k_n`, `n = 0..ops.len()`.
pub fn chain_prefix_traces(spec: &GamowSpec, ops: &[&BiorthOperator]) -> Result<Vec<ChainResult>> {
    check_dims(spec, ops)?;
    let evolved: Vec<BiorthOperator> = ops
        .iter()
        .enumerate()
        .map(|(j, op)| evolve_operator(spec, op, j))
        .collect();
    let refs: Vec<&DMatrix<Complex64>> = evolved.iter().map(|o| &o.coeffs).collect();
    let origins: Vec<f64> = ops.iter().map(|o| o.origin().re).collect();
    Ok(prefix_traces(&refs, &origins))
}

/// Running products of already-evolved coefficient matrices.
pub(crate) fn prefix_traces(evolved: &[&DMatrix<Complex64>], origins: &[f64]) -> Vec<ChainResult> {
    let mut out = Vec::with_capacity(evolved.len());
    let mut product: Option<DMatrix<Complex64>> = None;
    let mut diag = 1.0;
    for (n, (m, a)) in evolved.iter().zip(origins).enumerate() {
        let next = match product {
            None => (*m).clone(),
            Some(p) => p * *m,
        };
        diag *= a;
        out.push(ChainResult::new(n, next.trace(), diag));
        product = Some(next);
    }
    out
}

/// Evolved coefficient matrices `table[j][k] = Î_k(j)` for `j = 0..=depth`.
pub fn evolution_table(
    spec: &GamowSpec,
    cells: &[BiorthOperator],
    depth: usize,
) -> Result<Vec<Vec<BiorthOperator>>> {
    let refs: Vec<&BiorthOperator> = cells.iter().collect();
    check_dims(spec, &refs)?;
    Ok((0..=depth)
        .map(|j| cells.iter().map(|c| evolve_operator(spec, c, j)).collect())
        .collect())
}

/// Largest entrywise `|a − b| / max(|a|, |b|)`; entries that are both zero count as equal.
pub fn max_relative_deviation(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let scale = x.norm().max(y.norm());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).norm() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// `(δ₁, δ₂) = (min, max)` of `α(0,0)` over the cell operators.
pub fn decay_bounds(ops: &[BiorthOperator]) -> Result<(f64, f64)> {
    if ops.is_empty() {
        return domain("no cell operators");
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for op in ops {
        op.check_cell_indicator()?;
        lo = lo.min(op.origin().re);
        hi = hi.max(op.origin().re);
    }
    Ok((lo, hi))
}
