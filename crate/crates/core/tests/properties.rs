use nalgebra::DMatrix;
use num_complex::Complex64;
use pesinlab::dynamics::{make_map, preimage_cell, PhasePoint};
use pesinlab::exec::Exec;
use pesinlab::gamow::{
    chain_prefix_traces, decay_bounds, evolve_matrix_oracle, evolve_operator, make_cell_operators,
    max_relative_deviation, BiorthOperator, CellGeneration, GamowSpec, RandomCells,
};
use pesinlab::geometry::{region_area, Rect};
use pesinlab::lyapunov::{lyapunov_spectrum, positive_sum_field_with};
use pesinlab::partition::{refine_all, refine_all_with, GridPartition, McConfig, MeasureMode};
use pesinlab::pipeline::{prescription_run_with, RunConfig, Source};
use pesinlab::weyl::{pairing, CoherentState, FormalSymbol, PolySymbol};
use proptest::prelude::*;

fn map_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("identity"), Just("baker"), Just("cat")]
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

fn rect() -> impl Strategy<Value = Rect> {
    (unit(), unit(), unit(), unit()).prop_map(|(a, b, c, d)| {
        let (q0, q1) = if a < b { (a, b) } else { (b, a) };
        let (p0, p1) = if c < d { (c, d) } else { (d, c) };
        Rect::new(
            q0,
            q1.max(q0 + 1e-3).min(1.0),
            p0,
            p1.max(p0 + 1e-3).min(1.0),
        )
    })
}

fn formal() -> impl Strategy<Value = FormalSymbol> {
    prop::collection::vec(((0..=3u32, 0..=3u32), (-3..=3i64, -3..=3i64)), 1..5)
        .prop_map(FormalSymbol::from_integer_terms)
}

fn quadratic() -> impl Strategy<Value = FormalSymbol> {
    prop::collection::vec(((0..=2u32, 0..=2u32), (-3..=3i64, -3..=3i64)), 1..4).prop_map(|t| {
        FormalSymbol::from_integer_terms(t.into_iter().filter(|((a, b), _)| a + b <= 2))
    })
}

fn add(f: &FormalSymbol, g: &FormalSymbol) -> FormalSymbol {
    FormalSymbol(&f.0 + &g.0)
}

fn spec_and_op(n: usize) -> impl Strategy<Value = (GamowSpec, BiorthOperator)> {
    (
        0.2..3.0f64,
        0.01..0.5f64,
        0.5..2.0f64,
        0.1..2.0f64,
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n),
    )
        .prop_map(move |(w, g, h, a, entries)| {
            let spec = GamowSpec::new(w, g, h, a, n).unwrap();
            let m = DMatrix::from_iterator(
                n,
                n,
                entries.into_iter().map(|(re, im)| Complex64::new(re, im)),
            );
            (spec, BiorthOperator::new(m, "x").unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn preimages_keep_area(name in map_name(), cell in rect(), j in 0..5usize) {
        let map = make_map(name).unwrap();
        let area = region_area(&preimage_cell(&map, &cell, j).unwrap());
        prop_assert!((area - cell.area()).abs() < 1e-12, "{area} vs {}", cell.area());
    }

    #[test]
    fn jacobians_are_area_preserving(name in map_name(), q in unit(), p in unit()) {
        let map = make_map(name).unwrap();
        let det = map.jacobian(PhasePoint::new(q, p)).determinant();
        prop_assert!((det.abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_branches_map_back(name in map_name(), q in unit(), p in unit()) {
        let map = make_map(name).unwrap();
        let x = PhasePoint::new(q, p);
        let branches = map.inverse_branches(x);
        prop_assert!(!branches.is_empty());
        for y in branches {
            prop_assert!(map.step(y).torus_distance(&x) < 1e-12);
        }
        let back = map.inverse_branches(map.step(x));
        prop_assert!(back.iter().any(|y| y.torus_distance(&x) < 1e-12));
    }

    #[test]
    fn lyapunov_exponents_cancel(name in map_name(), q in unit(), p in unit()) {
        let map = make_map(name).unwrap();
        let s = lyapunov_spectrum(&map, PhasePoint::new(q, p), 500).unwrap();
        prop_assert!((s.exponents[0] + s.exponents[1]).abs() < 1e-12);
        prop_assert!(s.exponents[0] >= s.exponents[1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refinement_entropy_is_consistent(
        name in map_name(),
        m_q in 1..=3usize,
        m_p in 1..=3usize,
    ) {
        let map = make_map(name).unwrap();
        let grid = GridPartition::new(m_q, m_p).unwrap();
        let depth = if name == "cat" { 3 } else { 6 };
        let records = refine_all(&map, &grid, depth, &MeasureMode::Exact).unwrap();
        for w in records.windows(2) {
            prop_assert!(w[1].entropy >= w[0].entropy - 1e-12);
        }
        for r in &records {
            prop_assert!((r.measure_sum() - 1.0).abs() < 1e-9);
            prop_assert!(r.entropy <= (r.nonempty_words as f64).ln() + 1e-12);
            prop_assert!(r.entropy >= -1e-15);
        }
        if name == "identity" {
            let h0 = records[0].entropy;
            prop_assert!(records.iter().all(|r| (r.entropy - h0).abs() < 1e-12));
        }
    }

    #[test]
    fn exec_policies_agree(name in map_name(), seed in any::<u64>()) {
        let map = make_map(name).unwrap();
        let grid = GridPartition::new(2, 2).unwrap();
        let mc = MeasureMode::MonteCarlo(McConfig { n_samples: 20_000, seed, keep_words: true });
        for mode in [MeasureMode::Exact, mc] {
            let depth = if name == "cat" && mode == MeasureMode::Exact { 2 } else { 4 };
            let a = refine_all_with(&map, &grid, depth, &mode, Exec::Sequential).unwrap();
            let b = refine_all_with(&map, &grid, depth, &mode, Exec::Parallel).unwrap();
            prop_assert_eq!(a, b);
        }
        let pts: Vec<PhasePoint> = (0..8)
            .map(|k| PhasePoint::new((k as f64 * 0.123 + 0.01) % 1.0, (k as f64 * 0.377 + 0.02) % 1.0))
            .collect();
        let s = positive_sum_field_with(&map, &pts, 300, Exec::Sequential).unwrap();
        let p = positive_sum_field_with(&map, &pts, 300, Exec::Parallel).unwrap();
        prop_assert_eq!(s.to_bits(), p.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_is_associative(f in formal(), g in formal(), h in formal()) {
        prop_assert_eq!(f.star(&g).star(&h), f.star(&g.star(&h)));
    }

    #[test]
    fn moyal_is_antisymmetric_and_bilinear(f in formal(), g in formal(), h in formal()) {
        let fg = f.moyal(&g);
        prop_assert_eq!(FormalSymbol(&fg.0 + &g.moyal(&f).0), FormalSymbol::default());
        prop_assert_eq!(
            add(&f, &g).moyal(&h),
            add(&f.moyal(&h), &g.moyal(&h))
        );
    }

    #[test]
    fn poisson_satisfies_jacobi(f in formal(), g in formal(), h in formal()) {
        let sum = add(
            &add(&f.poisson(&g.poisson(&h)), &g.poisson(&h.poisson(&f))),
            &h.poisson(&f.poisson(&g)),
        );
        prop_assert_eq!(sum, FormalSymbol::default());
    }

    #[test]
    fn classical_limits(f in formal(), g in formal()) {
        prop_assert_eq!(f.star(&g).at_hbar_zero(), f.pointwise(&g));
        prop_assert_eq!(f.moyal(&g).at_hbar_zero(), f.poisson(&g));
    }

    #[test]
    fn moyal_is_poisson_for_quadratics(f in quadratic(), g in formal()) {
        prop_assert_eq!(f.moyal(&g), f.poisson(&g));
        prop_assert_eq!(g.moyal(&f), g.poisson(&f));
    }

    #[test]
    fn pairing_is_normalised(q in -10.0..10.0f64, p in -10.0..10.0f64, hbar in 0.01..5.0f64) {
        let rho = CoherentState::new(q, p, hbar).unwrap();
        let one = PolySymbol::constant(Complex64::new(1.0, 0.0), hbar).unwrap();
        prop_assert!((pairing(&rho, &one).unwrap() - 1.0).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_matches_oracle((spec, op) in (2..=12usize).prop_flat_map(spec_and_op), j in 0..8usize) {
        let d = max_relative_deviation(
            &evolve_operator(&spec, &op, j).coeffs,
            &evolve_matrix_oracle(&spec, &op, j).unwrap().coeffs,
        );
        prop_assert!(d < 1e-10, "deviation {d}");
    }

    #[test]
    fn origin_is_invariant_and_rest_decays((spec, op) in spec_and_op(6), j in 0..40usize) {
        let a = evolve_operator(&spec, &op, j);
        let b = evolve_operator(&spec, &op, j + 1);
        prop_assert_eq!(a.origin(), op.origin());
        let off = |o: &BiorthOperator| {
            o.coeffs.iter().map(|z| z.norm()).sum::<f64>() - o.origin().norm()
        };
        prop_assert!(off(&b) <= off(&a) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn chains_sit_in_the_sandwich(seed in any::<u64>(), word in prop::collection::vec(0..4usize, 20..60)) {
        let spec = GamowSpec::default();
        let cells = make_cell_operators(&spec, 4, &CellGeneration::Random(RandomCells::new(seed))).unwrap();
        let (d1, d2) = decay_bounds(&cells).unwrap();
        let ops: Vec<&BiorthOperator> = word.iter().map(|&k| &cells[k]).collect();
        let onset = (10.0 * spec.relaxation_steps()).ceil() as usize;
        let prefixes = chain_prefix_traces(&spec, &ops).unwrap();
        for r in prefixes.iter().skip(onset) {
            let ln = r.trace.norm().ln();
            let n1 = (r.n + 1) as f64;
            let slack = 2.0 * r.rel_error + 1e-12;
            prop_assert!(n1 * d1.ln() - slack <= ln && ln <= n1 * d2.ln() + slack, "n = {}", r.n);
        }
        for w in prefixes[onset.min(prefixes.len())..].windows(2) {
            prop_assert!(w[1].rel_error <= w[0].rel_error + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn quantum_runs_are_reproducible(seed in any::<u64>()) {
        let source = Source::Quantum {
            spec: GamowSpec { n_max: 8, ..GamowSpec::default() },
            cells: 3,
            generation: CellGeneration::Random(RandomCells::new(seed)),
        };
        let cfg = RunConfig { word_budget: 64, sample_words: 16, ..RunConfig::new(40, seed) };
        let a = prescription_run_with(&source, &cfg, Exec::Sequential).unwrap();
        let b = prescription_run_with(&source, &cfg, Exec::Parallel).unwrap();
        prop_assert_eq!(&a, &b);
        let r = &a.report;
        for w in r.values.windows(2).filter(|w| w[0].0 >= r.onset) {
            prop_assert!(w[1].1 < w[0].1, "mean measure rose at n = {}", w[1].0);
        }
    }
}
