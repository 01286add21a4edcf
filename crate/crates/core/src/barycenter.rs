//! Variance functional, exact fixed-support barycenters, balanced dual
//! potentials, the deficit `D_ρ(μ₁, μ₀)` and the convexity modulus.
//!
//! The barycenter of a finite law `ℙ = Σ λ_k δ_{ρ_k}` is found by one joint
//! linear program over couplings `π_k` (rows `supp ρ_k`, columns the whole
//! space) whose second marginals are forced to coincide. The row duals of
//! that program give a family of potentials with `Σ λ_k ψ_k ≡ 0`, which is
//! the starting point of [`balance_potentials`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::simplex::{solve_with_face_range, LinearProgram};
use crate::spaces::{DiscreteSpace, Measure, SecondOrderLaw};
use crate::transport::{
    c_transform, duality_gap_with_value, solve_w2, Normalization, PotentialPair,
};

/// Barycenter weights below this are treated as LP noise.
const MASS_FLOOR: f64 = 1e-14;
/// Spread of the secondary objective over the optimal face that counts
/// as a second optimum.
const NON_UNIQUE_TOL: f64 = 1e-7;
/// Base point for recentering.
const BASE_POINT: usize = 0;

/// `Σ_k λ_k W(μ, ρ_k)` with the transport values of [`solve_w2`].
pub fn variance(space: &DiscreteSpace, law: &SecondOrderLaw, mu: &Measure) -> Result<f64> {
    law.check_on(space)?;
    mu.check_on(space)?;
    let values = law
        .atoms()
        .par_iter()
        .map(|a| Ok(a.weight * solve_w2(space, mu, &a.measure)?.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarycenterOptions {
    /// Re-optimize a random linear functional of `μ` over the optimal face.
    pub detect_non_uniqueness: bool,
    /// Seed for that random functional.
    pub seed: u64,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        Self {
            detect_non_uniqueness: true,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStatus {
    /// Objective of the joint program.
    pub lp_objective: f64,
    pub pivots: usize,
    pub variables: usize,
    pub constraints: usize,
    /// A second optimal barycenter was found.
    pub non_unique: bool,
    /// Range of the random functional over the optimal face.
    pub face_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterResult {
    pub measure: Measure,
    pub variance_value: f64,
    /// Optimal pair for `(ρ_i, measure)`, one per atom of the input law.
    pub per_atom_potentials: Vec<PotentialPair>,
    /// Duality gap of each pair.
    pub per_atom_gaps: Vec<f64>,
    pub solver_status: SolverStatus,
}

impl BarycenterResult {
    /// `{weights, variance, per_atom: [{gap, phi, psi}], flags}`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Atom<'a> {
            gap: f64,
            phi: &'a [f64],
            psi: &'a [f64],
        }
        #[derive(Serialize)]
        struct Flags {
            non_unique: bool,
            lp_objective: f64,
            pivots: usize,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            weights: &'a [f64],
            variance: f64,
            per_atom: Vec<Atom<'a>>,
            flags: Flags,
        }
        let per_atom = self
            .per_atom_potentials
            .iter()
            .zip(&self.per_atom_gaps)
            .map(|(p, &gap)| Atom {
                gap,
                phi: &p.phi,
                psi: &p.psi,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&Dump {
            weights: self.measure.weights(),
            variance: self.variance_value,
            per_atom,
            flags: Flags {
                non_unique: self.solver_status.non_unique,
                lp_objective: self.solver_status.lp_objective,
                pivots: self.solver_status.pivots,
            },
        })?)
    }
}

/// Output of the joint program on a merged law.
struct JointSolution {
    measure: Measure,
    /// `(φ_k, ψ_k)` from the row duals, `φ_k` known on `supp ρ_k` only.
    duals: Vec<(Vec<f64>, Vec<f64>)>,
    status: SolverStatus,
}

/// Builds and solves the joint program for a law whose atoms are distinct
/// and carry positive weight.
fn solve_joint(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    opts: &BarycenterOptions,
) -> Result<JointSolution> {
    let n = space.point_count();
    let cost = space.cost();
    let atoms = law.atoms();
    let k_count = atoms.len();

    // rows: marginal rows of every atom, then coupling rows y for k >= 1
    let mut marginal_row = Vec::with_capacity(k_count);
    let mut b = Vec::new();
    for a in atoms {
        marginal_row.push(b.len());
        b.extend(a.measure.support().iter().map(|&x| a.measure.weight(x)));
    }
    let coupling_base = b.len();
    let rows = coupling_base + (k_count - 1) * n;
    b.resize(rows, 0.0);
    let coupling_row = |k: usize, y: usize| coupling_base + (k - 1) * n + y;

    let mut lp = LinearProgram::new(rows, b);
    // column index of π_0(x, y) for the secondary objective
    let mut first_block = Vec::new();
    for (k, a) in atoms.iter().enumerate() {
        for (i, &x) in a.measure.support().iter().enumerate() {
            for y in 0..n {
                let mut entries = vec![(marginal_row[k] + i, 1.0)];
                if k == 0 {
                    entries.extend((1..k_count).map(|j| (coupling_row(j, y), -1.0)));
                } else {
                    entries.push((coupling_row(k, y), 1.0));
                }
                let var = lp.add_var(a.weight * cost.get(x, y), entries);
                if k == 0 {
                    first_block.push((var, y));
                }
            }
        }
    }

    let secondary = if opts.detect_non_uniqueness && k_count > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let ry: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut r = vec![0.0; lp.var_count()];
        for &(var, y) in &first_block {
            r[var] = ry[y];
        }
        Some(r)
    } else {
        None
    };
    let (sol, face_range) = solve_with_face_range(&lp, secondary.as_deref())?;

    let mut mass = vec![0.0; n];
    for &(var, y) in &first_block {
        mass[y] += sol.x[var];
    }
    mass.iter_mut()
        .filter(|m| **m < MASS_FLOOR)
        .for_each(|m| *m = 0.0);
    let measure = Measure::normalized(mass)?;

    let mut duals = Vec::with_capacity(k_count);
    let mut psi0 = vec![0.0; n];
    for (k, a) in atoms.iter().enumerate() {
        let mut phi = vec![0.0; n];
        for (i, &x) in a.measure.support().iter().enumerate() {
            phi[x] = sol.y[marginal_row[k] + i] / a.weight;
        }
        let psi = if k == 0 {
            vec![0.0; n]
        } else {
            (0..n)
                .map(|y| {
                    let g = sol.y[coupling_row(k, y)];
                    psi0[y] -= g;
                    g / a.weight
                })
                .collect()
        };
        duals.push((phi, psi));
    }
    let w0 = atoms[0].weight;
    duals[0].1 = psi0.iter().map(|g| g / w0).collect();

    let non_unique = face_range.is_some_and(|(lo, hi)| hi - lo > NON_UNIQUE_TOL);
    Ok(JointSolution {
        measure,
        duals,
        status: SolverStatus {
            lp_objective: sol.objective,
            pivots: sol.pivots,
            variables: lp.var_count(),
            constraints: rows,
            non_unique,
            face_range,
        },
    })
}

/// Exact barycenter with default options.
pub fn solve_barycenter(space: &DiscreteSpace, law: &SecondOrderLaw) -> Result<BarycenterResult> {
    solve_barycenter_with(space, law, &BarycenterOptions::default())
}

pub fn solve_barycenter_with(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    opts: &BarycenterOptions,
) -> Result<BarycenterResult> {
    if law.is_empty() {
        return Err(Error::EmptyLaw);
    }
    law.check_on(space)?;
    for m in law.measures() {
        m.check_on(space)?;
    }
    let merged = law.merged();
    let (measure, status) = if merged.len() == 1 {
        let status = SolverStatus {
            lp_objective: 0.0,
            pivots: 0,
            variables: 0,
            constraints: 0,
            non_unique: false,
            face_range: None,
        };
        (merged.atoms()[0].measure.clone(), status)
    } else {
        let joint = solve_joint(space, &merged, opts)?;
        (joint.measure, joint.status)
    };

    let solved = law
        .atoms()
        .par_iter()
        .map(|a| solve_w2(space, &measure, &a.measure))
        .collect::<Result<Vec<_>>>()?;
    let variance_value = law
        .atoms()
        .iter()
        .zip(&solved)
        .map(|(a, s)| a.weight * s.value)
        .sum();
    let per_atom_gaps = solved.iter().map(|s| s.gap).collect();
    let per_atom_potentials = solved.into_iter().map(|s| s.potentials).collect();
    Ok(BarycenterResult {
        measure,
        variance_value,
        per_atom_potentials,
        per_atom_gaps,
        solver_status: status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// One pair per atom of the input law, normalized at the base point.
    pub pairs: Vec<PotentialPair>,
    /// `sup_y |Σ λ_i ψ_i(y)|` at exit.
    pub residual: f64,
    /// Duality gaps at exit.
    pub gaps: Vec<f64>,
    pub iterations: usize,
    /// `(residual, worst gap)` after every iteration.
    pub trace: Vec<(f64, f64)>,
}

/// Balanced Kantorovich potentials for `(ρ_i, μ_ℙ)`.
///
/// Checks that `mu_p` attains the optimal variance within `tol`, seeds
/// the loop with the joint program's duals and hands over to
/// [`balance_from`].
pub fn balance_potentials(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    mu_p: &Measure,
    opts: &BalanceOptions,
) -> Result<BalanceReport> {
    if law.is_empty() {
        return Err(Error::EmptyLaw);
    }
    law.check_on(space)?;
    mu_p.check_on(space)?;
    let n = space.point_count();
    let merged = law.merged();
    let got = variance(space, law, mu_p)?;
    let (optimum, merged_pairs) = if merged.len() == 1 {
        (0.0, vec![(vec![0.0; n], vec![0.0; n])])
    } else {
        let joint = solve_joint(
            space,
            &merged,
            &BarycenterOptions {
                detect_non_uniqueness: false,
                ..Default::default()
            },
        )?;
        (joint.status.lp_objective, joint.duals)
    };
    if got > optimum + opts.tol {
        return Err(Error::NotBarycenter {
            got,
            optimum,
            tol: opts.tol,
        });
    }

    // align merged pairs with the input atoms; zero-weight atoms get any
    // optimal pair since they do not enter the balance sum
    let mut initial = Vec::with_capacity(law.len());
    for a in law.atoms() {
        let pair = if a.weight > 0.0 {
            let k = merged
                .atoms()
                .iter()
                .position(|b| b.measure == a.measure)
                .expect("merged law keeps every positive atom");
            let psi = merged_pairs[k].1.clone();
            PotentialPair {
                phi: c_transform(space, &psi).values,
                psi,
                normalization: Normalization::None,
            }
        } else {
            solve_w2(space, mu_p, &a.measure)?.potentials
        };
        initial.push(pair);
    }
    balance_from(space, law, mu_p, initial, opts)
}

/// The normalization loop from explicit starting pairs:
/// (a) `ψ ← ψ^{cc}`, (b) `ψ_i ← ψ_i − Σ λ_j ψ_j`, (c) `ψ_i ← ψ_i − ψ_i(y₀)`,
/// (d) `φ_i = ψ_i^c`; stops once the balance residual and every duality
/// gap are within `tol`.
pub fn balance_from(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    mu_p: &Measure,
    initial: Vec<PotentialPair>,
    opts: &BalanceOptions,
) -> Result<BalanceReport> {
    law.check_on(space)?;
    mu_p.check_on(space)?;
    let n = space.point_count();
    if initial.len() != law.len() {
        return Err(Error::LengthMismatch {
            expected: law.len(),
            got: initial.len(),
        });
    }
    if let Some(p) = initial.iter().find(|p| p.psi.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p.psi.len(),
        });
    }
    let weights = law.weights();
    let values = law
        .atoms()
        .par_iter()
        .map(|a| Ok(solve_w2(space, mu_p, &a.measure)?.value))
        .collect::<Result<Vec<f64>>>()?;

    let mut psis: Vec<Vec<f64>> = initial.into_iter().map(|p| p.psi).collect();
    let mut trace = Vec::new();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for iter in 1..=opts.max_iters {
        // (a)
        psis.par_iter_mut().for_each(|psi| {
            let phi = c_transform(space, psi).values;
            *psi = c_transform(space, &phi).values;
        });
        // (b)
        let alpha: Vec<f64> = (0..n)
            .map(|y| weights.iter().zip(&psis).map(|(l, p)| l * p[y]).sum())
            .collect();
        for psi in &mut psis {
            psi.iter_mut().zip(&alpha).for_each(|(v, a)| *v -= a);
        }
        // (c)
        for psi in &mut psis {
            let base = psi[BASE_POINT];
            psi.iter_mut().for_each(|v| *v -= base);
        }
        // (d)
        let pairs: Vec<PotentialPair> = psis
            .par_iter()
            .map(|psi| PotentialPair {
                phi: c_transform(space, psi).values,
                psi: psi.clone(),
                normalization: Normalization::CenteredAtBase,
            })
            .collect();

        let residual = (0..n)
            .map(|y| {
                weights
                    .iter()
                    .zip(&psis)
                    .map(|(l, p)| l * p[y])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        let gaps = law
            .atoms()
            .iter()
            .zip(&pairs)
            .zip(&values)
            .map(|((a, p), &v)| duality_gap_with_value(space, v, mu_p, &a.measure, p))
            .collect::<Result<Vec<f64>>>()?;
        let worst = gaps.iter().cloned().fold(0.0, f64::max);
        trace.push((residual, worst));
        last = (residual, worst);
        if residual <= opts.tol && worst <= opts.tol {
            return Ok(BalanceReport {
                pairs,
                residual,
                gaps,
                iterations: iter,
                trace,
            });
        }
    }
    Err(Error::BalanceNonConvergence {
        iterations: opts.max_iters,
        residual: last.0,
        gap: last.1,
        trace,
    })
}

/// `D_ρ(μ₁, μ₀) = W(μ₁, ρ) − W(μ₀, ρ) − Σ ψ₀ (μ₁ − μ₀)`.
///
/// `psi0` must be a Kantorovich potential for `(ρ, μ₀)`: the pair
/// `(ψ₀^c, ψ₀)` has to close the duality gap to `1e-8`.
pub fn deficit(
    space: &DiscreteSpace,
    rho: &Measure,
    mu0: &Measure,
    mu1: &Measure,
    psi0: &[f64],
) -> Result<f64> {
    Ok(deficit_terms(space, rho, mu0, mu1, psi0)?.value)
}

/// The three terms of the deficit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitTerms {
    pub w_mu1: f64,
    pub w_mu0: f64,
    /// `Σ ψ₀ (μ₁ − μ₀)`.
    pub linear: f64,
    pub value: f64,
}

pub fn deficit_terms(
    space: &DiscreteSpace,
    rho: &Measure,
    mu0: &Measure,
    mu1: &Measure,
    psi0: &[f64],
) -> Result<DeficitTerms> {
    rho.check_on(space)?;
    mu0.check_on(space)?;
    mu1.check_on(space)?;
    let n = space.point_count();
    if psi0.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: psi0.len(),
        });
    }
    let w_mu0 = solve_w2(space, mu0, rho)?.value;
    let pair = PotentialPair {
        phi: c_transform(space, psi0).values,
        psi: psi0.to_vec(),
        normalization: Normalization::None,
    };
    let gap = duality_gap_with_value(space, w_mu0, mu0, rho, &pair)?;
    if gap > 1e-8 {
        return Err(Error::NotOptimal(gap));
    }
    let w_mu1 = solve_w2(space, mu1, rho)?.value;
    let linear: f64 = (0..n)
        .map(|y| psi0[y] * (mu1.weight(y) - mu0.weight(y)))
        .sum();
    Ok(DeficitTerms {
        w_mu1,
        w_mu0,
        linear,
        value: w_mu1 - w_mu0 - linear,
    })
}

/// Constants of the modulus `𝒟(t) = A₁ t¹² / (A₂ + A₃ |ln(t / D_W)|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Diameter of the space of measures under `w2`.
    pub d_w: f64,
    /// Exponent slack used by [`ModulusParams::c_sigma`].
    pub sigma: f64,
}

impl ModulusParams {
    pub fn new(a1: f64, a2: f64, a3: f64, d_w: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [
            ("A1", a1),
            ("A2", a2),
            ("A3", a3),
            ("D_W", d_w),
            ("sigma", sigma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            a1,
            a2,
            a3,
            d_w,
            sigma,
        })
    }

    /// Takes `D_W` from the space.
    pub fn from_space(
        space: &DiscreteSpace,
        a1: f64,
        a2: f64,
        a3: f64,
        sigma: f64,
    ) -> Result<Self> {
        Self::new(a1, a2, a3, space.wasserstein_diameter(), sigma)
    }

    /// Minimum of `𝒟(t) / t^{12+σ}` over a log grid of `(0, D_W]`, a
    /// positive constant with `𝒟(t) >= c_σ t^{12+σ}`.
    pub fn c_sigma(&self) -> f64 {
        const POINTS: usize = 2001;
        (0..POINTS)
            .map(|i| {
                let t = self.d_w * 10f64.powf(-12.0 * i as f64 / (POINTS - 1) as f64);
                self.a1 * t.powf(-self.sigma) / (self.a2 + self.a3 * (t / self.d_w).ln().abs())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `𝒟(t)` for `0 <= t <= D_W`.
pub fn modulus(t: f64, params: &ModulusParams) -> Result<f64> {
    if !(0.0..=params.d_w).contains(&t) {
        return Err(Error::ModulusDomain { t, max: params.d_w });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(params.a1 * t.powi(12) / (params.a2 + params.a3 * (t / params.d_w).ln().abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{build_model_space, ModelSpec};

    fn interval(n: usize, length: f64) -> DiscreteSpace {
        build_model_space(&ModelSpec::Interval { length }, n).unwrap()
    }

    #[test]
    fn two_point_variance() {
        let s = interval(2, 1.0);
        let law = SecondOrderLaw::new(vec![
            (Measure::dirac(2, 0), 0.5),
            (Measure::dirac(2, 1), 0.5),
        ])
        .unwrap();
        let v = variance(&s, &law, &Measure::dirac(2, 0)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_atom_law_is_its_own_barycenter() {
        let s = interval(6, 1.0);
        let rho = Measure::normalized(vec![1.0, 2.0, 0.0, 3.0, 1.0, 1.0]).unwrap();
        let r = solve_barycenter(&s, &SecondOrderLaw::single(rho.clone())).unwrap();
        assert_eq!(r.measure, rho);
        assert_eq!(r.variance_value, 0.0);
    }

    #[test]
    fn midpoint_of_two_diracs() {
        let s = interval(3, 1.0);
        let law = SecondOrderLaw::new(vec![
            (Measure::dirac(3, 0), 0.5),
            (Measure::dirac(3, 2), 0.5),
        ])
        .unwrap();
        let r = solve_barycenter(&s, &law).unwrap();
        assert_eq!(r.measure, Measure::dirac(3, 1));
        assert!((r.variance_value - 0.125).abs() < 1e-12);
        assert!(!r.solver_status.non_unique);
    }

    #[test]
    fn joint_duals_are_balanced_and_optimal() {
        let s = interval(7, 1.0);
        let a = Measure::normalized(vec![3.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let b = Measure::normalized(vec![0.0, 0.0, 1.0, 2.0, 0.0, 1.0, 0.0]).unwrap();
        let law = SecondOrderLaw::new(vec![(a, 0.3), (b, 0.7)]).unwrap();
        let joint = solve_joint(&s, &law, &BarycenterOptions::default()).unwrap();
        for y in 0..7 {
            let sum: f64 = law
                .weights()
                .iter()
                .zip(&joint.duals)
                .map(|(l, d)| l * d.1[y])
                .sum();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn modulus_values() {
        let p = ModulusParams::new(1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(modulus(0.0, &p).unwrap(), 0.0);
        let v = modulus(0.5, &p).unwrap();
        let expected = 0.5f64.powi(12) / (1.0 + 2f64.ln());
        assert!((v - expected).abs() < 1e-18);
        // quoted to four figures
        assert!((v - 1.4418e-4).abs() < 5e-8);
        assert!(modulus(1.5, &p).is_err());
        assert!(modulus(-0.1, &p).is_err());
        assert!(p.c_sigma() > 0.0);
        assert!(ModulusParams::new(0.0, 1.0, 1.0, 1.0, 0.5).is_err());
    }
}
