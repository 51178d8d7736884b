//! Independent oracles: each expected value is computed here by a route that
//! shares no code with the library.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pesinlab::dynamics::{make_map, PhasePoint};
use pesinlab::gamow::expm::expm;
use pesinlab::gamow::{
    chain_trace, evolve_operator, make_cell_operators, BiorthOperator, CellGeneration, GamowSpec,
    RandomCells,
};
use pesinlab::lyapunov::lyapunov_spectrum;
use pesinlab::partition::{refine, refine_all, GridPartition, MeasureMode};
use pesinlab::weyl::{pairing, star_product, CoherentState, PolySymbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binom(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `q^a p^b ⋆ q^c p^d` from the generating function
/// `e^{i(αq+βp)} ⋆ e^{i(γq+δp)} = e^{i(α+γ)q + i(β+δ)p} e^{(iħ/2)(βγ − αδ)}`,
/// reading off the coefficient of `α^a β^b γ^c δ^d`.
fn monomial_star(a: u32, b: u32, c: u32, d: u32, hbar: f64) -> Vec<((u32, u32), Complex64)> {
    let i = Complex64::i();
    let kappa = i * hbar / 2.0;
    let mut out: Vec<((u32, u32), Complex64)> = Vec::new();
    for m in 0..=(a + b + c + d) {
        for j in 0..=m {
            // Z^m/m! contributes (βγ)^j (−αδ)^{m−j} C(m, j) / m!
            let (ua, ub, uc, ud) = (m - j, j, j, m - j);
            if ua > a || ub > b || uc > c || ud > d {
                continue;
            }
            let (ra, rb, rc, rd) = (a - ua, b - ub, c - uc, d - ud);
            let z = kappa.powu(m) * binom(m, j) / factorial(m) * (-1f64).powi((m - j) as i32);
            // (i q)^s (α+γ)^s / s! with s = ra + rc, similarly for p
            let s = ra + rc;
            let t = rb + rd;
            let x = i.powu(s) * binom(s, ra) / factorial(s);
            let y = i.powu(t) * binom(t, rb) / factorial(t);
            let coeff = z
                * x
                * y
                * (factorial(a) * factorial(b) * factorial(c) * factorial(d))
                * (-i).powu(a + b + c + d);
            out.push(((s, t), coeff));
        }
    }
    out
}

#[test]
fn star_product_matches_generating_function() {
    let hbar = 0.37;
    for a in 0..=3 {
        for b in 0..=3 {
            for c in 0..=3 {
                for d in 0..=3 {
                    let f = PolySymbol::term(1.0, a, b, hbar).unwrap();
                    let g = PolySymbol::term(1.0, c, d, hbar).unwrap();
                    let got = star_product(&f, &g).unwrap();
                    let want = PolySymbol::new(monomial_star(a, b, c, d, hbar), hbar).unwrap();
                    assert!(
                        got.distance(&want) < 1e-12,
                        "q^{a}p^{b} ⋆ q^{c}p^{d}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

/// Tensor trapezoid rule over ±10 standard deviations.
fn quadrature(rho: &CoherentState, obs: &PolySymbol) -> Complex64 {
    let sd = (rho.hbar / 2.0).sqrt();
    let n = 400;
    let h = 20.0 * sd / n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let q = rho.q0 - 10.0 * sd + i as f64 * h;
        for j in 0..=n {
            let p = rho.p0 - 10.0 * sd + j as f64 * h;
            total += obs.eval(q, p) * rho.density(q, p);
        }
    }
    total * h * h
}

#[test]
fn pairing_matches_quadrature() {
    let hbar = 0.6;
    let rho = CoherentState::new(0.4, -0.7, hbar).unwrap();
    let obs = PolySymbol::parse("1 * q^2 p^1 + (0+2i) * q^1 p^3 - 3 * p^4 + 0.5", hbar).unwrap();
    let exact = pairing(&rho, &obs).unwrap();
    let numeric = quadrature(&rho, &obs);
    assert!((exact - numeric).norm() < 1e-9, "{exact} vs {numeric}");
}

#[test]
fn cat_exponent_is_log_of_leading_eigenvalue() {
    // eigenvalues of [[2,1],[1,1]] solve λ² − 3λ + 1 = 0
    let lambda = (3.0 + (9.0f64 - 4.0).sqrt()) / 2.0;
    let s = lyapunov_spectrum(
        &make_map("cat").unwrap(),
        PhasePoint::new(0.123, 0.456),
        5_000,
    )
    .unwrap();
    assert!((s.exponents[0] - lambda.ln()).abs() < 1e-9);
    assert!((s.exponents[1] + lambda.ln()).abs() < 1e-9);
}

#[test]
fn baker_exponents_are_log_two() {
    let s = lyapunov_spectrum(
        &make_map("baker").unwrap(),
        PhasePoint::new(0.3, 0.8),
        5_000,
    )
    .unwrap();
    assert!((s.exponents[0] - LN_2).abs() < 1e-12);
    assert!((s.exponents[1] + LN_2).abs() < 1e-12);
}

#[test]
fn baker_binary_partition_words_are_dyadic() {
    let r = refine(
        &make_map("baker").unwrap(),
        &GridPartition::new(2, 1).unwrap(),
        8,
        &MeasureMode::Exact,
    )
    .unwrap();
    assert_eq!(r.nonempty_words, 512);
    assert!(r.word_measures.values().all(|m| m.value == 1.0 / 512.0));
}

/// Cat-map cylinder sets on a 2x2 grid, counted by brute force on a fine
/// lattice of cell centres.
#[test]
fn cat_exact_measures_match_lattice_counts() {
    let map = make_map("cat").unwrap();
    let grid = GridPartition::new(2, 2).unwrap();
    let records = refine_all(&map, &grid, 3, &MeasureMode::Exact).unwrap();
    let k = 1200;
    let mut counts = std::collections::BTreeMap::<Vec<u32>, usize>::new();
    for i in 0..k {
        for j in 0..k {
            let mut x = PhasePoint::new((i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64);
            let mut w = Vec::new();
            for step in 0..4 {
                w.push(grid.cell_of(x));
                if step < 3 {
                    x = map.step(x);
                }
            }
            *counts.entry(w).or_default() += 1;
        }
    }
    let last = &records[3];
    assert_eq!(last.nonempty_words, counts.len());
    for (w, m) in &last.word_measures {
        let lattice = counts[w.symbols()] as f64 / (k * k) as f64;
        assert!(
            (m.value - lattice).abs() < 5e-3,
            "{w}: {} vs {lattice}",
            m.value
        );
    }
}

/// Truncated Taylor series, only for small-norm matrices.
fn taylor_expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * a / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    sum
}

#[test]
fn expm_matches_taylor_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2, 5, 12] {
        let a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let d = (expm(&a) - taylor_expm(&a)).norm();
        assert!(d < 1e-12, "n = {n}: {d}");
    }
}

#[test]
fn expm_inverse_and_large_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = DMatrix::from_fn(8, 8, |_, _| {
        Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
    });
    let prod = expm(&a) * expm(&(-a.clone()));
    assert!((prod - DMatrix::identity(8, 8)).norm() < 1e-8);
}

/// Rank-one cells make the chain a product of scalars.
#[test]
fn rank_one_chain_is_scalar_product() {
    let spec = GamowSpec::new(1.3, 0.2, 0.9, 0.5, 6).unwrap();
    let cells: Vec<BiorthOperator> = [0.2, 0.3, 0.45]
        .iter()
        .map(|&a| {
            let mut c = DMatrix::zeros(6, 6);
            c[(0, 0)] = Complex64::new(a, 0.0);
            BiorthOperator::new(c, "r").unwrap()
        })
        .collect();
    let word = [0usize, 2, 1, 1, 0, 2, 2];
    let ops: Vec<&BiorthOperator> = word.iter().map(|&k| &cells[k]).collect();
    let r = chain_trace(&spec, &ops, word.len() - 1).unwrap();
    let want: f64 = word.iter().map(|&k| [0.2, 0.3, 0.45][k]).product();
    assert!((r.trace.re - want).abs() < 1e-16 && r.trace.im == 0.0);
}

/// Doubling the truncation with zero padding leaves chain traces unchanged.
#[test]
fn truncation_doubling_is_stable() {
    let small = GamowSpec::new(1.0, 0.1, 1.0, 1.0, 16).unwrap();
    let large = GamowSpec { n_max: 32, ..small };
    let cells = make_cell_operators(
        &small,
        3,
        &CellGeneration::Random(RandomCells {
            seed: 3,
            coupling: 0.05,
            ratio: 0.8,
        }),
    )
    .unwrap();
    let padded: Vec<BiorthOperator> = cells
        .iter()
        .map(|c| {
            let mut m = DMatrix::zeros(32, 32);
            m.view_mut((0, 0), (16, 16)).copy_from(&c.coeffs);
            BiorthOperator::new(m, c.label.clone()).unwrap()
        })
        .collect();
    let word = [0usize, 1, 2, 2, 1, 0, 0, 1, 2, 1, 0, 2];
    let a: Vec<&BiorthOperator> = word.iter().map(|&k| &cells[k]).collect();
    let b: Vec<&BiorthOperator> = word.iter().map(|&k| &padded[k]).collect();
    let ta = chain_trace(&small, &a, word.len() - 1).unwrap().trace;
    let tb = chain_trace(&large, &b, word.len() - 1).unwrap().trace;
    assert!((ta - tb).norm() / ta.norm() < 1e-8);
}

/// The Gamow evolution of (r, s) entries in closed form with the eigenvalues
/// written out by hand.
#[test]
fn evolution_entries_by_hand() {
    let (w, g, hbar, alpha) = (1.7, 0.15, 0.8, 0.6);
    let spec = GamowSpec::new(w, g, hbar, alpha, 5).unwrap();
    let op = BiorthOperator::new(
        DMatrix::from_element(5, 5, Complex64::new(1.0, 0.0)),
        "ones",
    )
    .unwrap();
    let j = 4;
    let t = alpha * j as f64 / hbar;
    let e = evolve_operator(&spec, &op, j);
    for r in 0..5usize {
        for s in 0..5usize {
            let (zr_re, zr_im) = if r == 0 {
                (w, 0.0)
            } else {
                (r as f64 * w, -(r as f64) * g)
            };
            let (zs_re, zs_im) = if s == 0 {
                (w, 0.0)
            } else {
                (s as f64 * w, -(s as f64) * g)
            };
            // exp(−i z_r t) exp(i conj(z_s) t)
            let phase = -(zr_re - zs_re) * t;
            let decay = (zr_im + zs_im) * t;
            let want = Complex64::from_polar(decay.exp(), phase);
            assert!((e.coeffs[(r, s)] - want).norm() < 1e-13, "({r},{s})");
        }
    }
}
