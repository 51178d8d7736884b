//! Phase-space pairing `⟨O⟩_ρ = ∫ ρ(φ) O(φ) dφ` for a coherent-state Wigner
//! function, evaluated in closed form from Gaussian moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::symbol::PolySymbol;
use crate::error::{domain, Result};

/// Wigner function `exp(−((q−q₀)² + (p−p₀)²)/ħ) / (πħ)` of a coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub q0: f64,
    pub p0: f64,
    pub hbar: f64,
}

impl CoherentState {
    pub fn new(q0: f64, p0: f64, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return domain(format!(
                "Gaussian weight with hbar = {hbar} is not normalisable"
            ));
        }
        if !q0.is_finite() || !p0.is_finite() {
            return domain("coherent-state centre must be finite");
        }
        Ok(CoherentState { q0, p0, hbar })
    }

    pub fn density(&self, q: f64, p: f64) -> f64 {
        let r2 = (q - self.q0).powi(2) + (p - self.p0).powi(2);
        (-r2 / self.hbar).exp() / (std::f64::consts::PI * self.hbar)
    }

    /// `E[(c + X)^k]` with `X ~ N(0, ħ/2)`.
    fn shifted_moment(&self, centre: f64, k: u32) -> f64 {
        let var = self.hbar / 2.0;
        let mut total = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            if j % 2 == 0 {
                // (j-1)!! var^{j/2}
                let dfact: f64 = (1..j).step_by(2).map(|v| v as f64).product();
                total += binom * centre.powi((k - j) as i32) * dfact * var.powi((j / 2) as i32);
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        total
    }
}

/// `∫ ρ(q, p) O(q, p) dq dp` for a polynomial observable.
pub fn pairing(rho: &CoherentState, obs: &PolySymbol) -> Result<Complex64> {
    if (obs.hbar() - rho.hbar).abs() > 1e-12 * rho.hbar.max(1.0) {
        return domain(format!(
            "observable carries hbar = {} but the state has hbar = {}",
            obs.hbar(),
            rho.hbar
        ));
    }
    Ok(obs
        .terms()
        .map(|((a, b), c)| c * rho.shifted_moment(rho.q0, a) * rho.shifted_moment(rho.p0, b))
        .sum())
}
