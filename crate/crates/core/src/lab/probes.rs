//! Probes along the interpolation `ψ_s = ψ₀ + s(ψ₁ - ψ₀)` and of the
//! stability of potentials and transport maps on 1-D model spaces.

use rayon::prelude::*;

use super::{flat_dirichlet, job_rng, job_seed, Budget, ScanReport, ScanRow};
use crate::error::{Error, Result};
use crate::spaces::{DiscreteSpace, Layout, Measure};
use crate::transport::{c_transform, interpolation_map, solve_w2};

/// Relative slack for the zero-mean normalization of `φ`.
const NORMALIZATION_TOL: f64 = 1e-9;

/// Central differences on interval and circle layouts (one-sided at the
/// ends of an interval).
pub fn gradient(space: &DiscreteSpace, f: &[f64]) -> Result<Vec<f64>> {
    let n = space.point_count();
    if f.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: f.len(),
        });
    }
    match space.layout() {
        Layout::Interval { spacing } => {
            if n < 2 {
                return Ok(vec![0.0; n]);
            }
            Ok((0..n)
                .map(|i| {
                    if i == 0 {
                        (f[1] - f[0]) / spacing
                    } else if i == n - 1 {
                        (f[n - 1] - f[n - 2]) / spacing
                    } else {
                        (f[i + 1] - f[i - 1]) / (2.0 * spacing)
                    }
                })
                .collect())
        }
        Layout::Circle { spacing } => Ok((0..n)
            .map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * spacing))
            .collect()),
        other => Err(Error::NoStencil(format!(
            "no gradient stencil for layout {other:?}"
        ))),
    }
}

fn check_normalized(space: &DiscreteSpace, rho: &Measure, phi: &[f64]) -> Result<()> {
    let mean = rho.integrate(phi);
    let scale = phi
        .iter()
        .fold(space.diameter().powi(2), |s, v| s.max(v.abs()));
    if mean.abs() > NORMALIZATION_TOL * scale {
        return Err(Error::Normalization(mean));
    }
    Ok(())
}

/// Inputs of [`g_probe`]: `ψ_i` must be a Kantorovich potential for
/// `(ρ, μ_i)` with `E_ρ(ψ_i^c) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct GProbeInput<'a> {
    pub rho: &'a Measure,
    pub mu0: &'a Measure,
    pub mu1: &'a Measure,
    pub psi0: &'a [f64],
    pub psi1: &'a [f64],
}

/// `g(s) = ‖v∘T_s − E_ρ(v∘T_s)‖_{L¹(ρ)}` on an increasing grid from 0 to 1,
/// its trapezoid integral, the ratio `∫g / W₂⁶`, and the pointwise error
/// of `∫₀¹ (v∘T_s − E_ρ(v∘T_s)) ds = φ₀ − φ₁` on `supp ρ`.
pub fn g_probe(
    space: &DiscreteSpace,
    input: &GProbeInput<'_>,
    s_grid: &[f64],
    seed: u64,
) -> Result<ScanReport> {
    let n = space.point_count();
    let GProbeInput {
        rho,
        mu0,
        mu1,
        psi0,
        psi1,
    } = *input;
    if psi0.len() != n || psi1.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: psi0.len().min(psi1.len()),
        });
    }
    if s_grid.len() < 2
        || s_grid[0] != 0.0
        || *s_grid.last().unwrap() != 1.0
        || s_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(
            "s grid must increase from 0 to 1".into(),
        ));
    }
    let phi0 = c_transform(space, psi0).values;
    let phi1 = c_transform(space, psi1).values;
    check_normalized(space, rho, &phi0)?;
    check_normalized(space, rho, &phi1)?;
    let v: Vec<f64> = psi1.iter().zip(psi0).map(|(a, b)| a - b).collect();
    let support = rho.support();

    // centered v∘T_s on supp ρ, one vector per grid point
    let centered: Vec<Vec<f64>> = s_grid
        .par_iter()
        .map(|&s| {
            let map = interpolation_map(space, psi0, psi1, s)?.map;
            let vals: Vec<f64> = support.iter().map(|&x| v[map[x]]).collect();
            let mean: f64 = support
                .iter()
                .zip(&vals)
                .map(|(&x, f)| rho.weight(x) * f)
                .sum();
            Ok(vals.iter().map(|f| f - mean).collect())
        })
        .collect::<Result<_>>()?;
    let gs: Vec<f64> = centered
        .iter()
        .map(|c| {
            support
                .iter()
                .zip(c)
                .map(|(&x, f)| rho.weight(x) * f.abs())
                .sum()
        })
        .collect();

    let trapezoid = |f: &dyn Fn(usize) -> f64| -> f64 {
        s_grid
            .windows(2)
            .enumerate()
            .map(|(k, w)| 0.5 * (w[1] - w[0]) * (f(k) + f(k + 1)))
            .sum()
    };
    let integral_g = trapezoid(&|k| gs[k]);
    let identity_error = support
        .iter()
        .enumerate()
        .map(|(i, &x)| (trapezoid(&|k| centered[k][i]) - (phi0[x] - phi1[x])).abs())
        .fold(0.0, f64::max);
    let w2 = solve_w2(space, mu1, mu0)?.w2;
    let w2_pow6 = w2.powi(6);

    let config = serde_json::json!({
        "rho": rho, "mu0": mu0, "mu1": mu1, "s_grid_len": s_grid.len(),
    });
    let mut report = ScanReport::new("g_probe", space.label(), seed, config, &["s", "g"]);
    report.rows = s_grid
        .iter()
        .zip(&gs)
        .map(|(&s, &g)| ScanRow {
            label: "g".into(),
            scale: s,
            job_seed: seed,
            values: vec![s, g],
        })
        .collect();
    report.constants.insert("integral_g".into(), integral_g);
    report.constants.insert("w2".into(), w2);
    report.constants.insert("w2_pow6".into(), w2_pow6);
    report
        .constants
        .insert("identity_error".into(), identity_error);
    if w2 > 0.0 {
        let c2 = integral_g / w2_pow6;
        report.constants.insert("C2_hat".into(), c2);
        report.flags.insert("c2_positive".into(), c2 > 0.0);
    }
    // a 200-point grid should resolve the identity to 1e-3
    report.flags.insert(
        "identity".into(),
        identity_error <= 0.2 / s_grid.len() as f64,
    );
    Ok(report)
}

/// `(∫|∇φ₁ − ∇φ₀|² dρ, (∫|φ₁ − φ₀|² dρ)^{1/3})` for zero-mean potentials.
pub fn potential_stability_row(
    space: &DiscreteSpace,
    rho: &Measure,
    phi0: &[f64],
    phi1: &[f64],
) -> Result<(f64, f64)> {
    check_normalized(space, rho, phi0)?;
    check_normalized(space, rho, phi1)?;
    let g0 = gradient(space, phi0)?;
    let g1 = gradient(space, phi1)?;
    let l: f64 = rho
        .support()
        .iter()
        .map(|&x| rho.weight(x) * (g1[x] - g0[x]).powi(2))
        .sum();
    let q: f64 = rho
        .support()
        .iter()
        .map(|&x| rho.weight(x) * (phi1[x] - phi0[x]).powi(2))
        .sum();
    Ok((l, q.cbrt()))
}

/// Random Dirichlet(1) measure pairs, one job stream per pair.
pub fn random_pairs(
    space: &DiscreteSpace,
    count: usize,
    seed: u64,
) -> Result<Vec<(Measure, Measure)>> {
    let n = space.point_count();
    (0..count)
        .map(|i| {
            let mut rng = job_rng(seed, i as u64);
            Ok((flat_dirichlet(n, &mut rng)?, flat_dirichlet(n, &mut rng)?))
        })
        .collect()
}

/// Ratio `∫|∇φ₁ − ∇φ₀|² dρ / (∫|φ₁ − φ₀|² dρ)^{1/3}` over pairs of
/// targets; reports its maximum.
pub fn potential_stability_probe(
    space: &DiscreteSpace,
    rho: &Measure,
    pairs: &[(Measure, Measure)],
    seed: u64,
    budget: &Budget,
) -> Result<ScanReport> {
    // fail early on spaces without a stencil
    gradient(space, &vec![0.0; space.point_count()])?;
    let rows: Vec<Option<ScanRow>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (mu0, mu1))| {
            if budget.exhausted() {
                return Ok(None);
            }
            let phi0 = solve_w2(space, mu0, rho)?.potentials.phi;
            let phi1 = solve_w2(space, mu1, rho)?.potentials.phi;
            let (l, rq) = potential_stability_row(space, rho, &phi0, &phi1)?;
            Ok(Some(ScanRow {
                label: "pair".into(),
                scale: i as f64,
                job_seed: job_seed(seed, i as u64),
                values: vec![l, rq, l / rq],
            }))
        })
        .collect::<Result<_>>()?;
    let config = serde_json::json!({ "rho": rho, "pairs": pairs.len() });
    let mut report = ScanReport::new(
        "potential_stability",
        space.label(),
        seed,
        config,
        &["L", "Rq", "ratio"],
    );
    report.partial = rows.iter().any(|r| r.is_none());
    // identical potentials give 0/0 and bound nothing
    let (kept, excluded): (Vec<ScanRow>, Vec<ScanRow>) =
        rows.into_iter().flatten().partition(|r| r.values[1] > 0.0);
    report.rows = kept;
    report
        .constants
        .insert("excluded_rows".into(), excluded.len() as f64);
    let mut ratios = report.column("ratio").unwrap_or_default();
    ratios.sort_by(f64::total_cmp);
    let c_hat = ratios.last().copied().unwrap_or(0.0);
    report.constants.insert("C_pot_hat".into(), c_hat);
    if !ratios.is_empty() {
        report
            .constants
            .insert("median_ratio".into(), ratios[ratios.len() / 2]);
    }
    report.flags.insert("finite".into(), c_hat.is_finite());
    Ok(report)
}

/// Displacement of optimal maps against the gradient gap of their
/// potentials on 1-D spaces: fits `C` in `d(T₁, T₀) ≈ C |∇φ₁ − ∇φ₀|` by
/// ρ-weighted least squares through the origin.
pub fn map_stability_probe(
    space: &DiscreteSpace,
    rho: &Measure,
    pairs: &[(Measure, Measure)],
    seed: u64,
    budget: &Budget,
) -> Result<ScanReport> {
    let flat = match space.layout() {
        Layout::Interval { .. } => true,
        Layout::Circle { .. } => false,
        other => {
            return Err(Error::NoStencil(format!(
                "map probe needs a 1-D layout, got {other:?}"
            )))
        }
    };
    let rows: Vec<Option<ScanRow>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (mu0, mu1))| {
            if budget.exhausted() {
                return Ok(None);
            }
            let p0 = solve_w2(space, mu0, rho)?.potentials;
            let p1 = solve_w2(space, mu1, rho)?.potentials;
            let t0 = c_transform(space, &p0.psi).argmin;
            let t1 = c_transform(space, &p1.psi).argmin;
            let g0 = gradient(space, &p0.phi)?;
            let g1 = gradient(space, &p1.phi)?;
            let (mut ab, mut bb, mut aa) = (0.0, 0.0, 0.0);
            for &x in rho.support() {
                let a = space.dist(t1[x], t0[x]);
                let b = (g1[x] - g0[x]).abs();
                let w = rho.weight(x);
                ab += w * a * b;
                bb += w * b * b;
                aa += w * a * a;
            }
            let c = if bb > 0.0 { ab / bb } else { f64::NAN };
            Ok(Some(ScanRow {
                label: "pair".into(),
                scale: i as f64,
                job_seed: job_seed(seed, i as u64),
                values: vec![ab, bb, aa, c],
            }))
        })
        .collect::<Result<_>>()?;
    let config = serde_json::json!({ "rho": rho, "pairs": pairs.len() });
    let mut report = ScanReport::new(
        "map_stability",
        space.label(),
        seed,
        config,
        &["sum_ab", "sum_bb", "sum_aa", "C_pair"],
    );
    report.partial = rows.iter().any(|r| r.is_none());
    report.rows = rows.into_iter().flatten().collect();
    let ab: f64 = report.rows.iter().map(|r| r.values[0]).sum();
    let bb: f64 = report.rows.iter().map(|r| r.values[1]).sum();
    let aa: f64 = report.rows.iter().map(|r| r.values[2]).sum();
    let c = if bb > 0.0 { ab / bb } else { 0.0 };
    report.constants.insert("C_exp_hat".into(), c);
    if bb > 0.0 {
        // relative residual of the fit
        let resid = (aa - 2.0 * c * ab + c * c * bb).max(0.0) / aa.max(f64::MIN_POSITIVE);
        report
            .constants
            .insert("relative_residual".into(), resid.sqrt());
    }
    report.flags.insert("finite".into(), c.is_finite());
    if flat {
        report
            .flags
            .insert("flat_isometry".into(), (c - 1.0).abs() <= 0.05);
    }
    Ok(report)
}
