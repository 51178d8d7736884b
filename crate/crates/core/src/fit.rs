//! Ordinary least squares on a single regressor.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination. A perfectly flat response that is fit
    /// without residual counts as 1.
    pub r2: f64,
    /// Residual sum of squares.
    pub sse: f64,
}

/// Fit `y = intercept + slope * x`. Needs at least two distinct `x` values.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (a, b) in x.iter().zip(y) {
        let r = b - (intercept + slope * a);
        ss_res += r * r;
        ss_tot += (b - my) * (b - my);
    }
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let r2 = if ss_tot <= 1e-28 * scale {
        if ss_res <= 1e-28 * scale {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Some(LineFit {
        slope,
        intercept,
        r2,
        sse: ss_res,
    })
}
