//! Least-squares fits on log-log data.

use serde::{Deserialize, Serialize};

use super::NOISE_FLOOR;

/// `ln y ≈ slope · ln x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Weighted root-mean-square residual in log space.
    pub residual: f64,
    /// Points that entered the fit.
    pub used: usize,
}

/// Weighted least squares of `ln y` on `ln x`. Points with `x` or `y`
/// below [`NOISE_FLOOR`] are dropped and the two smallest remaining `x`
/// get half weight. Needs two distinct abscissae.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<Fit> {
    let mut pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x >= NOISE_FLOOR && y >= NOISE_FLOOR && x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weights: Vec<f64> = (0..pts.len())
        .map(|i| if i < 2 && pts.len() > 3 { 0.5 } else { 1.0 })
        .collect();
    let sw: f64 = weights.iter().sum();
    let mx = pts.iter().zip(&weights).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = pts.iter().zip(&weights).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * (p.0 - mx).powi(2))
        .sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * (p.0 - mx) * (p.1 - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / sw)
        .sqrt();
    Some(Fit {
        slope,
        intercept,
        residual,
        used: pts.len(),
    })
}
