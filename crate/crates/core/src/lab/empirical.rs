//! Empirical laws `ℙ_N`: how fast `W₁(ℙ_N, ℙ)` and the barycenter error
//! `W₂(μ_{ℙ_N}, μ_ℙ)` shrink with `N`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{job_rng, job_seed, loglog_fit, Budget, ScanReport, ScanRow};
use crate::barycenter::{solve_barycenter_with, BarycenterOptions};
use crate::error::{Error, Result};
use crate::spaces::{DiscreteSpace, SecondOrderLaw};
use crate::transport::{ground_distances, solve_w2, w1_from_ground};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConfig {
    /// Strictly increasing sample sizes.
    pub n_list: Vec<usize>,
    pub trials: usize,
    /// The median barycenter error must strictly decrease over the sample
    /// sizes up to this one.
    #[serde(default = "default_monotone_max")]
    pub monotone_max_n: usize,
}

fn default_monotone_max() -> usize {
    256
}

const COLUMNS: [&str; 4] = ["N", "trial", "W1", "bary_err"];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Trial `t` draws `max(n_list)` atom indices from `job_rng(seed, t)`; the
/// sample of size `N` is the first `N` of them, so errors along `n_list`
/// are nested within a trial.
pub fn empirical_rate_experiment(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    cfg: &EmpiricalConfig,
    sigma: f64,
    seed: u64,
    budget: &Budget,
) -> Result<ScanReport> {
    law.check_on(space)?;
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if cfg.n_list.is_empty() || cfg.n_list[0] == 0 || cfg.n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "n_list must be positive and strictly increasing".into(),
        ));
    }
    let opts = BarycenterOptions {
        detect_non_uniqueness: false,
        ..BarycenterOptions::default()
    };
    let mu_p = solve_barycenter_with(space, law, &opts)?.measure;
    // atoms of ℙ_N are atoms of ℙ, so one ground table serves every W₁
    let ground = ground_distances(space, law, law)?;
    let weights = law.weights();
    let n_max = *cfg.n_list.last().expect("nonempty");

    let rows: Vec<Option<Vec<ScanRow>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = job_rng(seed, t as u64);
            let draws: Vec<usize> = (0..n_max).map(|_| sample(law, &mut rng)).collect();
            let mut out = Vec::with_capacity(cfg.n_list.len());
            for &n in &cfg.n_list {
                if budget.exhausted() {
                    return Ok(None);
                }
                let mut counts = vec![0.0; law.len()];
                for &d in &draws[..n] {
                    counts[d] += 1.0 / n as f64;
                }
                let w1 = w1_from_ground(&counts, &weights, &ground)?;
                let mu_n =
                    solve_barycenter_with(space, &law.empirical(&draws[..n])?, &opts)?.measure;
                let err = solve_w2(space, &mu_n, &mu_p)?.w2;
                out.push(ScanRow {
                    label: "trial".into(),
                    scale: n as f64,
                    job_seed: job_seed(seed, t as u64),
                    values: vec![n as f64, t as f64, w1, err],
                });
            }
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;

    let config = serde_json::json!({ "empirical": cfg, "sigma": sigma, "law": law });
    let mut report = ScanReport::new("empirical_rate", space.label(), seed, config, &COLUMNS);
    report.partial = rows.iter().any(|r| r.is_none());
    report.rows = rows.into_iter().flatten().flatten().collect();
    report.rows.sort_by(|a, b| {
        a.scale
            .total_cmp(&b.scale)
            .then(a.values[1].total_cmp(&b.values[1]))
    });

    let mut ns = Vec::new();
    let mut mean_w1 = Vec::new();
    let mut med_err = Vec::new();
    for &n in &cfg.n_list {
        let rows: Vec<&ScanRow> = report.rows.iter().filter(|r| r.scale == n as f64).collect();
        if rows.is_empty() {
            continue;
        }
        let w1: Vec<f64> = rows.iter().map(|r| r.values[2]).collect();
        let err: Vec<f64> = rows.iter().map(|r| r.values[3]).collect();
        let m_w1 = w1.iter().sum::<f64>() / w1.len() as f64;
        let m_err = err.iter().sum::<f64>() / err.len() as f64;
        let med_w1 = median(w1);
        let med_e = median(err);
        report.constants.insert(format!("mean_W1_N{n}"), m_w1);
        report.constants.insert(format!("median_W1_N{n}"), med_w1);
        report
            .constants
            .insert(format!("mean_bary_err_N{n}"), m_err);
        report
            .constants
            .insert(format!("median_bary_err_N{n}"), med_e);
        ns.push(n as f64);
        mean_w1.push(m_w1);
        med_err.push(med_e);
    }
    let any_error = med_err.iter().any(|&e| e > 0.0) || mean_w1.iter().any(|&w| w > 0.0);
    if let (Some(&first), Some(&last)) = (med_err.first(), med_err.last()) {
        report.flags.insert("consistency".into(), last <= first);
    }
    if any_error {
        let upto: Vec<f64> = ns
            .iter()
            .zip(&med_err)
            .filter(|(&n, _)| n <= cfg.monotone_max_n as f64)
            .map(|(_, &e)| e)
            .collect();
        report.flags.insert(
            "median_error_strictly_decreasing".into(),
            upto.windows(2).all(|w| w[1] < w[0]),
        );
        match loglog_fit(&ns, &mean_w1) {
            Some(fit) => {
                report.constants.insert("w1_rate".into(), fit.slope);
                report
                    .flags
                    .insert("w1_rate".into(), (fit.slope + 0.5).abs() <= 0.15);
                report.fits.insert("log_W1_vs_log_N".into(), fit);
            }
            None => {
                report.flags.insert("w1_rate".into(), false);
            }
        }
        if let Some(fit) = loglog_fit(&ns, &med_err) {
            report.constants.insert("bary_err_rate".into(), fit.slope);
            report.fits.insert("log_bary_err_vs_log_N".into(), fit);
        }
    }
    Ok(report)
}

fn sample<R: Rng + ?Sized>(law: &SecondOrderLaw, rng: &mut R) -> usize {
    law.sample_index(rng)
}
