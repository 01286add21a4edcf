//! Stability of barycenters under perturbations of the law: `W₂` between
//! barycenters against `W₁` between laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::perturb::{perturb_law, LawPerturbation};
use super::{job_rng, job_seed, loglog_fit, Budget, ScanReport, ScanRow};
use crate::barycenter::solve_barycenter;
use crate::error::{Error, Result};
use crate::spaces::{check_density_bounds, DiscreteSpace, SecondOrderLaw};
use crate::transport::{solve_w2, w1_between_laws};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub family: LawPerturbation,
    /// Perturbation scales in `[0, 1]`.
    pub scales: Vec<f64>,
    pub sigma: f64,
}

const COLUMNS: [&str; 3] = ["W1", "W2", "W2_pow"];

/// For each scale perturbs `law` into `Q` (job `i` draws from
/// `job_rng(seed, i)`), and records `x = W₁(P, Q)` and
/// `y = W₂(μ_P, μ_Q)`. Fits the smallest `C` with `y^{12+σ} <= C x` on all
/// rows and the slope of `ln y` against `ln x`.
pub fn barycenter_stability_scan(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    cfg: &StabilityConfig,
    seed: u64,
    budget: &Budget,
) -> Result<ScanReport> {
    law.check_on(space)?;
    for atom in law.atoms() {
        if let Some(good) = &atom.good {
            good.validate()?;
            let check = check_density_bounds(space, &atom.measure, good, atom.measure.support());
            if check.worst_ratio > good.ratio() * (1.0 + 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "atom flagged good has density ratio {:.4} above {:.4}",
                    check.worst_ratio,
                    good.ratio()
                )));
            }
        }
    }
    if !(cfg.sigma > 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {}",
            cfg.sigma
        )));
    }
    if cfg.scales.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidParameter(
            "law perturbation scales must lie in [0, 1]".into(),
        ));
    }
    let mu_p = solve_barycenter(space, law)?.measure;
    let power = 12.0 + cfg.sigma;
    let label = serde_json::to_value(cfg.family)?["kind"]
        .as_str()
        .unwrap_or("family")
        .to_string();

    let rows: Vec<Option<ScanRow>> = cfg
        .scales
        .par_iter()
        .enumerate()
        .map(|(i, &scale)| {
            if budget.exhausted() {
                return Ok(None);
            }
            let mut rng = job_rng(seed, i as u64);
            let q = perturb_law(space, law, &cfg.family, scale, &mut rng)?;
            let x = w1_between_laws(space, law, &q)?;
            let mu_q = solve_barycenter(space, &q)?.measure;
            let y = solve_w2(space, &mu_q, &mu_p)?.w2;
            Ok(Some(ScanRow {
                label: label.clone(),
                scale,
                job_seed: job_seed(seed, i as u64),
                values: vec![x, y, y.powf(power)],
            }))
        })
        .collect::<Result<_>>()?;

    let config = serde_json::json!({ "stability": cfg, "law": law });
    let mut report = ScanReport::new(
        "barycenter_stability",
        space.label(),
        seed,
        config,
        &COLUMNS,
    );
    report.partial = rows.iter().any(|r| r.is_none());
    report.rows = rows.into_iter().flatten().collect();

    let xs = report.column("W1").unwrap_or_default();
    let ys = report.column("W2").unwrap_or_default();
    // rows with x = 0 must have y = 0 (Q = P); otherwise they bound nothing
    let zero_x_ok = xs.iter().zip(&ys).all(|(&x, &y)| x > 0.0 || y == 0.0);
    let c_hat = xs
        .iter()
        .zip(&ys)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &y)| y.powf(power) / x)
        .fold(0.0, f64::max);
    let bound_holds = zero_x_ok
        && xs
            .iter()
            .zip(&ys)
            .all(|(&x, &y)| y.powf(power) <= c_hat * x * (1.0 + 1e-12));
    report.constants.insert("C_hat".into(), c_hat);
    report.constants.insert("power".into(), power);
    report
        .flags
        .insert("stability_bound".into(), bound_holds && c_hat.is_finite());
    let floor = 1.0 / power - 0.05;
    report.constants.insert("slope_floor".into(), floor);
    match loglog_fit(&xs, &ys) {
        Some(fit) => {
            report.constants.insert("alpha".into(), fit.slope);
            report.flags.insert("slope".into(), fit.slope >= floor);
            report.fits.insert("log_W2_vs_log_W1".into(), fit);
        }
        None => {
            report.flags.insert("slope".into(), false);
        }
    }
    Ok(report)
}
