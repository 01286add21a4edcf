//! Shared fixtures for the benchmarks.

use barylab::spaces::{build_model_space, sample_good_measure, ModelSpec};
use barylab::transport::solve_w2;
use barylab::{DiscreteSpace, GoodMeasureParams, Measure, SecondOrderLaw};

pub fn interval(n: usize) -> DiscreteSpace {
    build_model_space(&ModelSpec::Interval { length: 1.0 }, n).expect("valid interval")
}

pub fn sphere(n: usize) -> DiscreteSpace {
    build_model_space(&ModelSpec::Sphere { radius: 1.0 }, n).expect("valid sphere")
}

/// A full-support measure with density ratio at most 4.
pub fn good(space: &DiscreteSpace, seed: u64) -> Measure {
    let all: Vec<usize> = (0..space.point_count()).collect();
    let params = GoodMeasureParams::new(0.5, 2.0).expect("valid bounds");
    sample_good_measure(space, &params, &all, seed).expect("good measure")
}

/// `k` equally weighted good atoms.
pub fn law(space: &DiscreteSpace, k: usize, seed: u64) -> SecondOrderLaw {
    SecondOrderLaw::new(
        (0..k as u64)
            .map(|i| (good(space, seed + i), 1.0))
            .collect(),
    )
    .expect("valid law")
}

/// A Kantorovich potential `ψ` for `(ρ, μ)`.
pub fn potential(space: &DiscreteSpace, mu: &Measure, rho: &Measure) -> Vec<f64> {
    solve_w2(space, mu, rho).expect("solvable").potentials.psi
}
