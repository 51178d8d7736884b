//! Lyapunov spectra by tangent-map propagation with QR re-orthonormalisation,
//! and the Pesin-identity comparison against an entropy estimate.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{PhasePoint, TorusMap};
use crate::error::{domain, Result};
use crate::exec::Exec;

pub const MIN_ITERATIONS: usize = 100;

/// Steps discarded before accumulation so the tangent frame has aligned
/// with the Oseledets directions.
pub const DEFAULT_TRANSIENT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    pub n_iterations: usize,
    pub x0: PhasePoint,
    pub positive_sum: f64,
}

pub fn lyapunov_spectrum(map: &TorusMap, x0: PhasePoint, n: usize) -> Result<LyapunovSpectrum> {
    lyapunov_spectrum_with_transient(map, x0, n, DEFAULT_TRANSIENT)
}

pub fn lyapunov_spectrum_with_transient(
    map: &TorusMap,
    x0: PhasePoint,
    n: usize,
    transient: usize,
) -> Result<LyapunovSpectrum> {
    if n < MIN_ITERATIONS {
        return domain(format!(
            "{n} iterations requested; need at least {MIN_ITERATIONS}"
        ));
    }
    let mut x = x0;
    let mut frame = Matrix2::identity();
    let mut sums = [0.0f64; 2];
    for step in 0..transient + n {
        let moved = map.jacobian(x) * frame;
        let (q, r) = gram_schmidt(&moved)?;
        frame = q;
        if step >= transient {
            sums[0] += r[0].ln();
            sums[1] += r[1].ln();
        }
        x = map.step(x);
    }
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let positive_sum = exponents.iter().filter(|&&s| s > 0.0).sum::<f64>() + 0.0;
    Ok(LyapunovSpectrum {
        exponents,
        n_iterations: n,
        x0,
        positive_sum,
    })
}

/// Column-wise Gram–Schmidt; returns the orthonormal frame and `|R_ii|`.
fn gram_schmidt(m: &Matrix2<f64>) -> Result<(Matrix2<f64>, [f64; 2])> {
    let v1: Vector2<f64> = m.column(0).into();
    let v2: Vector2<f64> = m.column(1).into();
    let r11 = v1.norm();
    if !(r11 > 0.0) || !r11.is_finite() {
        return domain("tangent vector collapsed (singular or non-finite Jacobian)");
    }
    let e1 = v1 / r11;
    let w = v2 - e1 * e1.dot(&v2);
    let r22 = w.norm();
    if !(r22 > 0.0) || !r22.is_finite() {
        return domain("tangent frame became degenerate (singular or non-finite Jacobian)");
    }
    let e2 = w / r22;
    Ok((Matrix2::from_columns(&[e1, e2]), [r11, r22]))
}

/// Phase-space average of `Σ_{σ_i > 0} σ_i` over equal-weight samples.
pub fn positive_sum_field(map: &TorusMap, samples: &[PhasePoint], n: usize) -> Result<f64> {
    positive_sum_field_with(map, samples, n, Exec::default())
}

pub fn positive_sum_field_with(
    map: &TorusMap,
    samples: &[PhasePoint],
    n: usize,
    exec: Exec,
) -> Result<f64> {
    if samples.is_empty() {
        return domain("no sample points for the phase-space average");
    }
    let sums = exec.map_slice(samples, |&x| {
        lyapunov_spectrum(map, x, n).map(|s| s.positive_sum)
    });
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PesinReport {
    pub h_ks_estimate: f64,
    pub lyapunov_positive_sum: f64,
    /// `h_ks_estimate - lyapunov_positive_sum`
    pub residual: f64,
    pub relative_residual: f64,
}

pub fn pesin_residual(h_ks: f64, positive_sum: f64) -> Result<PesinReport> {
    for (name, v) in [("h_KS", h_ks), ("positive exponent sum", positive_sum)] {
        if !v.is_finite() || v < 0.0 {
            return domain(format!("{name} = {v} must be finite and nonnegative"));
        }
    }
    let residual = h_ks - positive_sum;
    Ok(PesinReport {
        h_ks_estimate: h_ks,
        lyapunov_positive_sum: positive_sum,
        residual,
        relative_residual: residual / positive_sum.max(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::make_map;

    const CAT_RATE: f64 = 0.962_423_650_119_206_9;

    #[test]
    fn identity_spectrum_is_zero() {
        let id = make_map("identity").unwrap();
        let s = lyapunov_spectrum(&id, PhasePoint::new(0.3, 0.1), 1000).unwrap();
        assert_eq!(s.exponents, vec![0.0, 0.0]);
        assert_eq!(s.positive_sum, 0.0);
    }

    #[test]
    fn cat_spectrum() {
        let cat = make_map("cat").unwrap();
        let s = lyapunov_spectrum(&cat, PhasePoint::new(0.1, 0.2), 10_000).unwrap();
        assert!(
            (s.exponents[0] - CAT_RATE).abs() < 1e-6,
            "{:?}",
            s.exponents
        );
        assert!((s.exponents[0] + s.exponents[1]).abs() < 1e-6);
    }

    #[test]
    fn baker_spectrum() {
        let baker = make_map("baker").unwrap();
        let s = lyapunov_spectrum(
            &baker,
            PhasePoint::new(std::f64::consts::FRAC_1_SQRT_2, 0.3),
            10_000,
        )
        .unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((s.exponents[0] - ln2).abs() < 1e-6);
        assert!((s.exponents[1] + ln2).abs() < 1e-6);
    }

    #[test]
    fn too_few_iterations() {
        let cat = make_map("cat").unwrap();
        assert!(lyapunov_spectrum(&cat, PhasePoint::new(0.1, 0.2), 99).is_err());
    }

    #[test]
    fn positive_sum_examples() {
        let pts: Vec<_> = (0..10)
            .map(|i| PhasePoint::new(0.07 * i as f64 + 0.01, 0.13 * i as f64))
            .collect();
        let id = make_map("identity").unwrap();
        assert_eq!(positive_sum_field(&id, &pts, 200).unwrap(), 0.0);
        let cat = make_map("cat").unwrap();
        assert!((positive_sum_field(&cat, &pts, 1000).unwrap() - CAT_RATE).abs() < 1e-6);
        let baker = make_map("baker").unwrap();
        assert!(
            (positive_sum_field(&baker, &pts, 1000).unwrap() - std::f64::consts::LN_2).abs() < 1e-6
        );
        assert!(positive_sum_field(&cat, &[], 1000).is_err());
    }

    #[test]
    fn pesin_report() {
        let r = pesin_residual(0.0, 0.0).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.relative_residual, 0.0);
        let r = pesin_residual(0.7, 0.693).unwrap();
        assert!((r.residual - 0.007).abs() < 1e-15);
        assert!(pesin_residual(-0.1, 0.5).is_err());
        assert!(pesin_residual(f64::NAN, 0.5).is_err());
    }
}
