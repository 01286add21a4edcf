//! Covering nets: farthest-point nets of the space, lattice nets of the
//! simplex, and the product net of `(𝒫(Ω), W₂)` built from both.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flat_dirichlet, job_rng};
use crate::error::{Error, Result};
use crate::spaces::{DiscreteSpace, Measure};
use crate::transport::solve_w2;

/// Slack on covering radii.
const COVER_TOL: f64 = 1e-12;

/// Greedy farthest-point insertion from point 0 until every point lies
/// within `r` of the net. Ties go to the lowest index.
pub fn farthest_point_net(space: &DiscreteSpace, r: f64) -> Result<Vec<usize>> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "net radius must be positive, got {r}"
        )));
    }
    let mut net = vec![0];
    let mut to_net = space.dist_row(0).to_vec();
    loop {
        let (far, &d) = to_net
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("space is nonempty");
        if d <= r + COVER_TOL {
            return Ok(net);
        }
        net.push(far);
        for (t, &e) in to_net.iter_mut().zip(space.dist_row(far)) {
            *t = t.min(e);
        }
    }
}

/// Lattice denominator used by [`simplex_net`]: the least `K` with
/// `1/K <= delta/m`.
fn lattice_size(m: usize, delta: f64) -> Result<usize> {
    if m == 0 || delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "simplex net needs m >= 1 and delta > 0, got {m}, {delta}"
        )));
    }
    Ok(((m as f64 / delta) - 1e-9).ceil().max(1.0) as usize)
}

/// Number of points of [`simplex_net`]`(m, delta)`, `C(K+m-1, m-1)`, as a
/// float so that huge nets can be sized without overflow.
pub fn simplex_net_size(m: usize, delta: f64) -> Result<f64> {
    let k = lattice_size(m, delta)?;
    Ok((1..m).map(|i| (k + i) as f64 / i as f64).product())
}

/// All compositions `(k_1/K, ..., k_m/K)` with `K` from [`lattice_size`],
/// in lexicographic order of `(k_1, ..., k_m)`. Every point of the simplex
/// lies within ℓ¹ distance `delta` of one of them.
pub fn simplex_net(m: usize, delta: f64) -> Result<Vec<Vec<f64>>> {
    let k = lattice_size(m, delta)?;
    let mut out = Vec::new();
    let mut counts = vec![0usize; m];
    compositions(k, 0, &mut counts, &mut |c| {
        out.push(c.iter().map(|&v| v as f64 / k as f64).collect())
    });
    Ok(out)
}

fn compositions(left: usize, at: usize, counts: &mut [usize], emit: &mut dyn FnMut(&[usize])) {
    if at + 1 == counts.len() {
        counts[at] = left;
        emit(counts);
        return;
    }
    for v in 0..=left {
        counts[at] = v;
        compositions(left - v, at + 1, counts, emit);
    }
}

/// Rounds a probability vector to multiples of `1/k` (largest remainder,
/// ties to the lowest index); the ℓ¹ error is below `m/k`.
fn round_to_lattice(p: &[f64], k: usize) -> Vec<usize> {
    let scaled: Vec<f64> = p.iter().map(|v| v * k as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let missing = k.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        (scaled[b] - scaled[b].floor())
            .total_cmp(&(scaled[a] - scaled[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Largest net that will be materialized.
    pub cap: usize,
    /// Random probes in the verification pass.
    pub probes: usize,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            cap: 200_000,
            probes: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetResult {
    pub epsilon: f64,
    pub net: Vec<Measure>,
    pub cardinality: usize,
    /// Covering radius of the point net.
    pub r: f64,
    /// ℓ¹ resolution of the weight net.
    pub delta: f64,
    /// Size of the point net.
    pub m: usize,
    pub net_points: Vec<usize>,
    /// Lattice denominator of the weight net.
    pub lattice: usize,
    pub probes: usize,
    /// Largest `W₂` from a probe to the net element it was matched to.
    pub max_probe_distance: f64,
    /// True when every probe was within `epsilon`.
    pub verified: bool,
}

/// `ε`-net of `(𝒫(Ω), W₂)`: measures on an `ε/2` point net with weights
/// from the simplex net of resolution `ε²/(2 diam²)`. When `ε` is at least
/// the `W₂` diameter a single Dirac suffices.
///
/// Verification draws Dirichlet(1) probes, pushes each to its nearest net
/// point, rounds the result onto the weight lattice and computes the exact
/// `W₂` to that element, which bounds the distance to the net.
pub fn wasserstein_net(space: &DiscreteSpace, epsilon: f64, cfg: &NetConfig) -> Result<NetResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = space.point_count();
    let diam = space.diameter();
    let (net_points, delta, lattice) = if epsilon >= space.wasserstein_diameter() {
        (vec![0], 1.0, 1)
    } else {
        let pts = farthest_point_net(space, epsilon / 2.0)?;
        let delta = epsilon * epsilon / (2.0 * diam * diam);
        let k = lattice_size(pts.len(), delta)?;
        (pts, delta, k)
    };
    let m = net_points.len();
    let size = simplex_net_size(m, m as f64 / lattice as f64)?;
    if size > cfg.cap as f64 {
        return Err(Error::NetCap {
            cardinality: size,
            cap: cfg.cap,
        });
    }
    let lift = |counts: &[usize]| {
        let mut w = vec![0.0; n];
        for (&p, &c) in net_points.iter().zip(counts) {
            w[p] = c as f64 / lattice as f64;
        }
        Measure::normalized(w)
    };
    let mut net = Vec::with_capacity(size as usize);
    let mut counts = vec![0usize; m];
    let mut lift_err = None;
    compositions(lattice, 0, &mut counts, &mut |c| match lift(c) {
        Ok(mu) => net.push(mu),
        Err(e) => lift_err = Some(e),
    });
    if let Some(e) = lift_err {
        return Err(e);
    }

    // nearest net point of every point
    let nearest: Vec<usize> = (0..n)
        .map(|x| {
            (0..m)
                .min_by(|&a, &b| {
                    space
                        .dist(x, net_points[a])
                        .total_cmp(&space.dist(x, net_points[b]))
                })
                .expect("net is nonempty")
        })
        .collect();
    let distances: Vec<f64> = (0..cfg.probes)
        .into_par_iter()
        .map(|i| {
            let probe = flat_dirichlet(n, &mut job_rng(cfg.seed, i as u64))?;
            let mut pushed = vec![0.0; m];
            for &x in probe.support() {
                pushed[nearest[x]] += probe.weight(x);
            }
            let matched = lift(&round_to_lattice(&pushed, lattice))?;
            Ok(solve_w2(space, &matched, &probe)?.w2)
        })
        .collect::<Result<_>>()?;
    let max_probe_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(NetResult {
        epsilon,
        cardinality: net.len(),
        net,
        r: epsilon / 2.0,
        delta,
        m,
        net_points,
        lattice,
        probes: cfg.probes,
        max_probe_distance,
        verified: max_probe_distance <= epsilon,
    })
}

/// Smallest `C > max ε` with `ln |net_ε| <= C ε^{-n} ln(C/ε)` for every
/// result, found by bisection.
pub fn fit_entropy_constant(results: &[NetResult], n: usize) -> Option<f64> {
    let max_eps = results.iter().map(|r| r.epsilon).fold(0.0, f64::max);
    if results.is_empty() || max_eps.is_nan() || max_eps <= 0.0 {
        return None;
    }
    let holds = |c: f64| {
        results.iter().all(|r| {
            (r.cardinality as f64).ln() <= c * r.epsilon.powi(-(n as i32)) * (c / r.epsilon).ln()
        })
    };
    let mut lo = max_eps;
    let mut hi = 2.0 * max_eps;
    while !holds(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}
