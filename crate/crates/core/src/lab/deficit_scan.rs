//! Deficit `D_ρ(μ₁, μ₀)` against the transport distance along a
//! perturbation family, with a fitted lower modulus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{loglog_fit, Budget, ScanReport, ScanRow};
use crate::barycenter::{deficit_terms, modulus, ModulusParams};
use crate::error::{Error, Result};
use crate::spaces::{check_density_bounds, DiscreteSpace, GoodMeasureParams, Measure};
use crate::transport::solve_w2;

use super::perturb::{perturb_measure, Perturbation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitScanConfig {
    pub family: Perturbation,
    /// Strictly decreasing, in `[0, 1]`.
    pub scales: Vec<f64>,
    /// Bounds `ρ` must satisfy.
    pub good: GoodMeasureParams,
    /// Slack below zero allowed for `D`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

const COLUMNS: [&str; 6] = ["R", "D", "w_mu1", "w_mu0", "linear", "modulus"];

/// Scans the deficit along `cfg.family` and fits `A₁` (with `A₂ = A₃ = 1`)
/// as large as possible subject to `D >= 𝒟(R)` on every row.
pub fn deficit_scan(
    space: &DiscreteSpace,
    rho: &Measure,
    mu0: &Measure,
    cfg: &DeficitScanConfig,
    seed: u64,
    budget: &Budget,
) -> Result<ScanReport> {
    let domain: Vec<usize> = rho.support().to_vec();
    let check = check_density_bounds(space, rho, &cfg.good, &domain);
    if !check.ok {
        return Err(Error::InvalidParameter(format!(
            "rho density {:.4}..{:.4} outside [{}, {}]",
            check.min_density, check.max_density, cfg.good.m_lower, cfg.good.m_upper
        )));
    }
    if cfg.scales.is_empty()
        || cfg.scales.windows(2).any(|w| w[1] >= w[0])
        || cfg.scales.iter().any(|&s| s < 0.0)
    {
        return Err(Error::InvalidParameter(
            "scales must be nonnegative and strictly decreasing".into(),
        ));
    }
    let psi0 = solve_w2(space, mu0, rho)?.potentials.psi;
    let label = serde_json::to_value(cfg.family)?["kind"]
        .as_str()
        .unwrap_or("family")
        .to_string();

    let rows: Vec<Option<ScanRow>> = cfg
        .scales
        .par_iter()
        .map(|&scale| {
            if budget.exhausted() {
                return Ok(None);
            }
            let mu1 = perturb_measure(space, mu0, &cfg.family, scale)?;
            let r = solve_w2(space, &mu1, mu0)?.w2;
            if scale > 0.0 && r == 0.0 {
                return Err(Error::DegeneratePerturbation(scale));
            }
            let t = deficit_terms(space, rho, mu0, &mu1, &psi0)?;
            Ok(Some(ScanRow {
                label: label.clone(),
                scale,
                job_seed: seed,
                values: vec![r, t.value, t.w_mu1, t.w_mu0, t.linear, f64::NAN],
            }))
        })
        .collect::<Result<_>>()?;

    let config = serde_json::json!({ "deficit_scan": cfg, "rho": rho, "mu0": mu0 });
    let mut report = ScanReport::new("deficit_scan", space.label(), seed, config, &COLUMNS);
    report.partial = rows.iter().any(|r| r.is_none());
    report.rows = rows.into_iter().flatten().collect();

    let d_w = space.wasserstein_diameter();
    let rs = report.column("R").unwrap_or_default();
    let ds = report.column("D").unwrap_or_default();
    let nonnegative = ds.iter().all(|&d| d >= -cfg.tolerance);

    // largest A1 with D >= A1 R^12 / (1 + |ln(R / D_W)|), shaded by one
    // part in 1e12 so the bound survives rounding on the binding row
    let a1 = rs
        .iter()
        .zip(&ds)
        .filter(|(&r, _)| r > 0.0)
        .map(|(&r, &d)| d * (1.0 + (r / d_w).ln().abs()) / r.powi(12))
        .fold(f64::INFINITY, f64::min)
        * (1.0 - 1e-12);
    let mut bound_holds = a1.is_finite() && a1 > 0.0;
    if bound_holds {
        let params = ModulusParams::new(a1, 1.0, 1.0, d_w, 0.5)?;
        for row in &mut report.rows {
            let m = modulus(row.values[0].min(d_w), &params)?;
            row.values[5] = m;
            bound_holds &= row.values[1] >= m;
        }
        report.constants.insert("c_sigma".into(), params.c_sigma());
    }
    report.constants.insert("A1".into(), a1);
    report.constants.insert("A2".into(), 1.0);
    report.constants.insert("A3".into(), 1.0);
    report.constants.insert("D_W".into(), d_w);

    if let Some(fit) = loglog_fit(&rs, &ds) {
        report.constants.insert("exponent".into(), fit.slope);
        report.fits.insert("log_D_vs_log_R".into(), fit);
    }
    if let Some(e) = envelope_exponent(&rs, &ds) {
        report.constants.insert("envelope_exponent".into(), e);
    }
    report
        .flags
        .insert("deficit_nonnegative".into(), nonnegative);
    report
        .flags
        .insert("modulus_lower_bound".into(), bound_holds);
    Ok(report)
}

/// Largest `e` with `D >= D₀ (R / R₀)^e` for all rows, anchored at the
/// smallest usable `R₀`.
fn envelope_exponent(rs: &[f64], ds: &[f64]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = rs
        .iter()
        .zip(ds)
        .filter(|(&r, &d)| r >= super::NOISE_FLOOR && d >= super::NOISE_FLOOR)
        .map(|(&r, &d)| (r, d))
        .collect();
    let &(r0, d0) = usable.iter().min_by(|a, b| a.0.total_cmp(&b.0))?;
    usable
        .iter()
        .filter(|p| p.0 > r0)
        .map(|&(r, d)| (d / d0).ln() / (r / r0).ln())
        .min_by(f64::total_cmp)
}
