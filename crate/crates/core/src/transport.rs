//! Kantorovich machinery for the cost `c(x, y) = d(x, y)^2 / 2`.
//!
//! [`solve_w2`] returns the optimal value (the transport cost under this
//! cost, i.e. half the textbook squared distance), its square root `w2`,
//! an optimal plan and a dual pair `(φ, ψ)` with `φ = ψ^c` on the whole
//! space. Plans are oriented with the source `ρ` on rows (carrying `φ`)
//! and the target `μ` on columns (carrying `ψ`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::solve_transportation;
use crate::spaces::{DiscreteSpace, Measure, SecondOrderLaw};

/// Tolerance for detecting argmin ties.
pub const TIE_TOL: f64 = 1e-12;
/// Slack allowed in `φ(x) + ψ(y) <= c(x, y)`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Dense symmetric matrix of `d^2 / 2`.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    n: usize,
    c: Vec<f64>,
}

impl CostMatrix {
    pub fn from_space(space: &DiscreteSpace) -> Self {
        let c = space.dist_matrix().iter().map(|d| 0.5 * d * d).collect();
        Self {
            n: space.point_count(),
            c,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.c[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.c[x * self.n..(x + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }
}

/// Convenience wrapper around [`DiscreteSpace::cost`].
pub fn cost_matrix(space: &DiscreteSpace) -> &CostMatrix {
    space.cost()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// `Σ ρ φ = 0`.
    ZeroMeanPhi,
    /// `ψ(y₀) = 0` at the base point.
    CenteredAtBase,
}

/// A dual pair; both vectors are indexed by all points of the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub normalization: Normalization,
}

impl PotentialPair {
    /// Moves a constant from `φ` to `ψ` so that `Σ ρ φ = 0`; the dual
    /// objective against probability measures is unchanged.
    pub fn zero_mean(mut self, rho: &Measure) -> Self {
        let m = rho.integrate(&self.phi);
        self.phi.iter_mut().for_each(|v| *v -= m);
        self.psi.iter_mut().for_each(|v| *v += m);
        self.normalization = Normalization::ZeroMeanPhi;
        self
    }

    /// Shifts so that `ψ(base) = 0`.
    pub fn centered_at(mut self, base: usize) -> Self {
        let m = self.psi[base];
        self.psi.iter_mut().for_each(|v| *v -= m);
        self.phi.iter_mut().for_each(|v| *v += m);
        self.normalization = Normalization::CenteredAtBase;
        self
    }

    /// `Σ φ dρ + Σ ψ dμ`.
    pub fn dual_value(&self, mu: &Measure, rho: &Measure) -> f64 {
        rho.integrate(&self.phi) + mu.integrate(&self.psi)
    }

    /// Largest violation of `φ(x) + ψ(y) <= c(x, y)` over `x ∈ supp ρ`.
    pub fn max_violation(&self, space: &DiscreteSpace, rho: &Measure) -> f64 {
        let cost = space.cost();
        let mut worst = f64::NEG_INFINITY;
        for &x in rho.support() {
            for (y, &c) in cost.row(x).iter().enumerate() {
                worst = worst.max(self.phi[x] + self.psi[y] - c);
            }
        }
        worst
    }
}

/// Result of a c-transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CTransform {
    pub values: Vec<f64>,
    /// Lowest-index minimizer per point.
    pub argmin: Vec<usize>,
    /// Whether a second minimizer exists within [`TIE_TOL`].
    pub tie: Vec<bool>,
}

/// `ψ^c(x) = min_y c(x, y) - ψ(y)` for every point `x`.
pub fn c_transform(space: &DiscreteSpace, psi: &[f64]) -> CTransform {
    let n = space.point_count();
    let all: Vec<usize> = (0..n).collect();
    c_transform_over(space, psi, &all)
}

/// The c-transform with the minimum restricted to `over`; values are
/// produced for every point.
pub fn c_transform_over(space: &DiscreteSpace, psi: &[f64], over: &[usize]) -> CTransform {
    let cost = space.cost();
    let n = space.point_count();
    let mut values = vec![0.0; n];
    let mut argmin = vec![0; n];
    let mut tie = vec![false; n];
    for x in 0..n {
        let row = cost.row(x);
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        for &y in over {
            let v = row[y] - psi[y];
            if v < best {
                best = v;
                arg = y;
            }
        }
        let tied = over
            .iter()
            .any(|&y| y != arg && row[y] - psi[y] <= best + TIE_TOL);
        values[x] = best;
        argmin[x] = arg;
        tie[x] = tied;
    }
    CTransform {
        values,
        argmin,
        tie,
    }
}

/// Sparse nonnegative coupling with rows indexed by the source measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub point_count: usize,
    /// `(x, y, mass)` with `x` in the source support, `y` in the target's.
    pub entries: Vec<(usize, usize, f64)>,
    pub total_cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.point_count];
        for &(x, _, m) in &self.entries {
            s[x] += m;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.point_count];
        for &(_, y, m) in &self.entries {
            s[y] += m;
        }
        s
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.point_count;
        let mut d = vec![0.0; n * n];
        for &(x, y, m) in &self.entries {
            d[x * n + y] += m;
        }
        d
    }

    pub fn cost_under(&self, space: &DiscreteSpace) -> f64 {
        let cost = space.cost();
        self.entries
            .iter()
            .map(|&(x, y, m)| m * cost.get(x, y))
            .sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct W2Solution {
    /// Optimal cost under `d^2 / 2`.
    pub value: f64,
    /// `sqrt(value)`.
    pub w2: f64,
    pub plan: TransportPlan,
    pub potentials: PotentialPair,
    /// `value - (Σ φ dρ + Σ ψ dμ)` for the returned potentials.
    pub gap: f64,
    pub pivots: usize,
}

impl W2Solution {
    /// Plan/potential dump `{value, w2, coupling, phi, psi, gap}`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            value: f64,
            w2: f64,
            coupling: &'a [(usize, usize, f64)],
            phi: &'a [f64],
            psi: &'a [f64],
            gap: f64,
        }
        Ok(serde_json::to_string_pretty(&Dump {
            value: self.value,
            w2: self.w2,
            coupling: &self.plan.entries,
            phi: &self.potentials.phi,
            psi: &self.potentials.psi,
            gap: self.gap,
        })?)
    }
}

/// Optimal transport from `rho` (source) to `mu` (target).
pub fn solve_w2(space: &DiscreteSpace, mu: &Measure, rho: &Measure) -> Result<W2Solution> {
    mu.check_on(space)?;
    rho.check_on(space)?;
    let cost = space.cost();
    let rows = rho.support();
    let cols = mu.support();
    let a: Vec<f64> = rows.iter().map(|&x| rho.weight(x)).collect();
    let b: Vec<f64> = cols.iter().map(|&y| mu.weight(y)).collect();
    let mut sub = Vec::with_capacity(rows.len() * cols.len());
    for &x in rows {
        let row = cost.row(x);
        sub.extend(cols.iter().map(|&y| row[y]));
    }
    let sol = solve_transportation(&a, &b, &sub)?;

    let entries: Vec<(usize, usize, f64)> = sol
        .cells
        .iter()
        .filter(|c| c.2 > 0.0)
        .map(|&(i, j, f)| (rows[i], cols[j], f))
        .collect();
    let value = entries
        .iter()
        .map(|&(x, y, m)| m * cost.get(x, y))
        .sum::<f64>();

    // tighten: ψ = (φ|supp ρ)^c on the whole space, then φ = ψ^c
    let mut phi_raw = vec![0.0; space.point_count()];
    for (i, &x) in rows.iter().enumerate() {
        phi_raw[x] = sol.u[i];
    }
    let potentials = tighten(space, rho, &phi_raw);
    let gap = value - potentials.dual_value(mu, rho);
    Ok(W2Solution {
        value,
        w2: value.max(0.0).sqrt(),
        plan: TransportPlan {
            point_count: space.point_count(),
            entries,
            total_cost: value,
        },
        potentials,
        gap,
        pivots: sol.iterations,
    })
}

/// The optimal value only.
pub fn w2_value(space: &DiscreteSpace, mu: &Measure, rho: &Measure) -> Result<f64> {
    Ok(solve_w2(space, mu, rho)?.value)
}

/// Turns a `φ` known on `supp ρ` into a c-concave pair `ψ = φ^c`,
/// `φ = ψ^c`, normalized to zero ρ-mean.
pub fn tighten(space: &DiscreteSpace, rho: &Measure, phi_on_support: &[f64]) -> PotentialPair {
    let psi = c_transform_over(space, phi_on_support, rho.support()).values;
    let phi = c_transform(space, &psi).values;
    PotentialPair {
        phi,
        psi,
        normalization: Normalization::None,
    }
    .zero_mean(rho)
}

/// `value(μ, ρ) - (Σ ψ dμ + Σ φ dρ)`, after checking feasibility.
pub fn duality_gap(
    space: &DiscreteSpace,
    mu: &Measure,
    rho: &Measure,
    potentials: &PotentialPair,
) -> Result<f64> {
    let value = w2_value(space, mu, rho)?;
    duality_gap_with_value(space, value, mu, rho, potentials)
}

/// As [`duality_gap`] with the optimal value supplied.
pub fn duality_gap_with_value(
    space: &DiscreteSpace,
    value: f64,
    mu: &Measure,
    rho: &Measure,
    potentials: &PotentialPair,
) -> Result<f64> {
    let n = space.point_count();
    if potentials.phi.len() != n || potentials.psi.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: potentials.phi.len().min(potentials.psi.len()),
        });
    }
    let violation = potentials.max_violation(space, rho);
    if violation > FEASIBILITY_TOL {
        return Err(Error::InfeasiblePotentials(violation));
    }
    Ok(value - potentials.dual_value(mu, rho))
}

/// Matrix of `w2(a_i, b_j)` between the atoms of two laws.
pub fn ground_distances(
    space: &DiscreteSpace,
    p: &SecondOrderLaw,
    q: &SecondOrderLaw,
) -> Result<Vec<f64>> {
    p.check_on(space)?;
    q.check_on(space)?;
    let pm: Vec<&Measure> = p.measures().collect();
    let qm: Vec<&Measure> = q.measures().collect();
    let pairs: Vec<(usize, usize)> = (0..pm.len())
        .flat_map(|i| (0..qm.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            if pm[i] == qm[j] {
                Ok(0.0)
            } else {
                Ok(solve_w2(space, qm[j], pm[i])?.w2)
            }
        })
        .collect()
}

/// Optimal transport cost between weight vectors for a given ground
/// distance matrix (row-major `p.len() x q.len()`).
pub fn w1_from_ground(p: &[f64], q: &[f64], ground: &[f64]) -> Result<f64> {
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    let a: Vec<f64> = rows.iter().map(|&i| p[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| q[j]).collect();
    let mut sub = Vec::with_capacity(a.len() * b.len());
    for &i in &rows {
        sub.extend(cols.iter().map(|&j| ground[i * q.len() + j]));
    }
    Ok(solve_transportation(&a, &b, &sub)?.cost.max(0.0))
}

/// 1-Wasserstein distance between second-order laws, with ground distance
/// `w2` between their atoms.
pub fn w1_between_laws(
    space: &DiscreteSpace,
    p: &SecondOrderLaw,
    q: &SecondOrderLaw,
) -> Result<f64> {
    let ground = ground_distances(space, p, q)?;
    w1_from_ground(&p.weights(), &q.weights(), &ground)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    /// `T_s(x)`, the lowest-index minimizer of `c(x, ·) - ψ_s`.
    pub map: Vec<usize>,
    pub phi: Vec<f64>,
    pub ties: Vec<bool>,
}

/// Linear interpolation `ψ_s = ψ₀ + s (ψ₁ - ψ₀)` with its c-transform and
/// minimizing map.
pub fn interpolation_map(
    space: &DiscreteSpace,
    psi0: &[f64],
    psi1: &[f64],
    s: f64,
) -> Result<Interpolation> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::SOutOfRange(s));
    }
    let n = space.point_count();
    if psi0.len() != n || psi1.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: psi0.len().min(psi1.len()),
        });
    }
    let psi_s: Vec<f64> = psi0
        .iter()
        .zip(psi1)
        .map(|(a, b)| a + s * (b - a))
        .collect();
    let ct = c_transform(space, &psi_s);
    Ok(Interpolation {
        map: ct.argmin,
        phi: ct.values,
        ties: ct.tie,
    })
}
