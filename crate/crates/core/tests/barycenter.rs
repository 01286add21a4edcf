use barylab::barycenter::{
    balance_from, balance_potentials, deficit, deficit_terms, modulus, solve_barycenter, variance,
    BalanceOptions, ModulusParams,
};
use barylab::heatreg::{
    gibbs_family, heat_kernel, k_derivatives, regularized_functional, soft_c_transform, HeatConfig,
};
use barylab::lp::simplex::{solve, LinearProgram};
use barylab::spaces::{build_model_space, sample_good_measure, ModelSpec};
use barylab::transport::{c_transform, duality_gap, solve_w2};
use barylab::{DiscreteSpace, Error, GoodMeasureParams, Measure, SecondOrderLaw};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval(n: usize) -> DiscreteSpace {
    build_model_space(&ModelSpec::Interval { length: 1.0 }, n).unwrap()
}

fn circle(n: usize) -> DiscreteSpace {
    build_model_space(&ModelSpec::Circle { circumference: 1.0 }, n).unwrap()
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    Measure::normalized((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Sparse random measure: roughly a third of the points carry mass.
fn sparse_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.35 {
                    rng.random::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        if raw.iter().any(|&w| w > 0.0) {
            return Measure::normalized(raw).unwrap();
        }
    }
}

fn random_law(rng: &mut ChaCha8Rng, n: usize, atoms: usize) -> SecondOrderLaw {
    SecondOrderLaw::new(
        (0..atoms)
            .map(|_| (sparse_measure(rng, n), 0.2 + rng.random::<f64>()))
            .collect(),
    )
    .unwrap()
}

/// Transport value from the general simplex, bypassing the network code.
fn lp_transport_value(space: &DiscreteSpace, mu: &Measure, rho: &Measure) -> f64 {
    let n = space.point_count();
    let mut b: Vec<f64> = rho.weights().to_vec();
    b.extend_from_slice(mu.weights());
    let mut lp = LinearProgram::new(2 * n, b);
    for x in 0..n {
        for y in 0..n {
            let d = space.dist(x, y);
            lp.add_var(0.5 * d * d, vec![(x, 1.0), (n + y, 1.0)]);
        }
    }
    solve(&lp).unwrap().objective
}

/// Barycenter value from a formulation with explicit `μ` variables.
fn explicit_mu_barycenter_value(space: &DiscreteSpace, law: &SecondOrderLaw) -> f64 {
    let n = space.point_count();
    let k = law.len();
    // rows: per atom n row-marginal rows and n coupling rows, plus Σ μ = 1
    let rows = 2 * n * k + 1;
    let mut b = vec![0.0; rows];
    for (i, m) in law.measures().enumerate() {
        b[2 * n * i..2 * n * i + n].copy_from_slice(m.weights());
    }
    b[rows - 1] = 1.0;
    let mut lp = LinearProgram::new(rows, b);
    for (i, atom) in law.atoms().iter().enumerate() {
        for x in 0..n {
            for y in 0..n {
                let d = space.dist(x, y);
                lp.add_var(
                    atom.weight * 0.5 * d * d,
                    vec![(2 * n * i + x, 1.0), (2 * n * i + n + y, 1.0)],
                );
            }
        }
    }
    for y in 0..n {
        let mut entries: Vec<(usize, f64)> = (0..k).map(|i| (2 * n * i + n + y, -1.0)).collect();
        entries.push((rows - 1, 1.0));
        lp.add_var(0.0, entries);
    }
    solve(&lp).unwrap().objective
}

#[test]
fn two_diracs_on_three_points_have_the_midpoint_as_barycenter() {
    let space = interval(3);
    let law = SecondOrderLaw::new(vec![
        (Measure::dirac(3, 0), 0.5),
        (Measure::dirac(3, 2), 0.5),
    ])
    .unwrap();
    let result = solve_barycenter(&space, &law).unwrap();
    assert_eq!(result.measure, Measure::dirac(3, 1));
    assert!((result.variance_value - 0.125).abs() <= 1e-9);

    // every grid measure with masses in steps of 1/40, valued by the general LP
    let steps = 40;
    let mut best = (f64::INFINITY, vec![]);
    for i in 0..=steps {
        for j in 0..=steps - i {
            let w = vec![i as f64, j as f64, (steps - i - j) as f64];
            let mu = Measure::normalized(w.clone()).unwrap();
            let v: f64 = law
                .atoms()
                .iter()
                .map(|a| a.weight * lp_transport_value(&space, &mu, &a.measure))
                .sum();
            if v < best.0 {
                best = (v, w);
            }
        }
    }
    assert!((best.0 - 0.125).abs() < 1e-12);
    assert_eq!(best.1, vec![0.0, steps as f64, 0.0]);
    let endpoint = variance(&space, &law, &Measure::dirac(3, 0)).unwrap();
    let split = variance(
        &space,
        &law,
        &Measure::normalized(vec![1.0, 0.0, 1.0]).unwrap(),
    )
    .unwrap();
    assert!((endpoint - 0.25).abs() < 1e-15);
    assert!((split - 0.25).abs() < 1e-15);
}

#[test]
fn single_atom_law() {
    let space = interval(10);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rho = random_measure(&mut rng, 10);
    let r = solve_barycenter(&space, &SecondOrderLaw::single(rho.clone())).unwrap();
    assert_eq!(r.measure, rho);
    assert_eq!(r.variance_value, 0.0);
    assert_eq!(
        variance(&space, &SecondOrderLaw::single(rho.clone()), &rho).unwrap(),
        0.0
    );
}

#[test]
fn antipodal_diracs_on_a_circle_are_flagged() {
    let space = circle(8);
    let law = SecondOrderLaw::new(vec![
        (Measure::dirac(8, 0), 0.5),
        (Measure::dirac(8, 4), 0.5),
    ])
    .unwrap();
    let r = solve_barycenter(&space, &law).unwrap();
    assert!(r.solver_status.non_unique);
    let (lo, hi) = r.solver_status.face_range.unwrap();
    assert!(hi - lo > 1e-3);
    // both quarter points are optimal, as is any split between them
    assert!(r.measure.support().iter().all(|&y| y == 2 || y == 6));
    assert!((r.variance_value - 0.03125).abs() < 1e-12);
    for mu in [
        Measure::dirac(8, 2),
        Measure::dirac(8, 6),
        Measure::normalized(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0, 0.0]).unwrap(),
    ] {
        assert!((variance(&space, &law, &mu).unwrap() - 0.03125).abs() < 1e-12);
    }
}

#[test]
fn barycenter_invariants_and_optimality_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (space, atoms) in [(interval(12), 3), (circle(10), 2), (interval(9), 4)] {
        let n = space.point_count();
        let law = random_law(&mut rng, n, atoms);
        let r = solve_barycenter(&space, &law).unwrap();

        let oracle = explicit_mu_barycenter_value(&space, &law);
        assert!(
            (r.variance_value - oracle).abs() < 1e-9,
            "{} vs {oracle}",
            r.variance_value
        );
        let recomputed: f64 = law
            .atoms()
            .iter()
            .map(|a| a.weight * solve_w2(&space, &r.measure, &a.measure).unwrap().value)
            .sum();
        assert!((r.variance_value - recomputed).abs() < 1e-8);
        for (a, pair) in law.atoms().iter().zip(&r.per_atom_potentials) {
            assert!(duality_gap(&space, &r.measure, &a.measure, pair).unwrap() <= 1e-8);
        }
        for _ in 0..20 {
            let competitor = random_measure(&mut rng, n);
            assert!(variance(&space, &law, &competitor).unwrap() >= r.variance_value - 1e-8);
        }
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["per_atom"].as_array().unwrap().len(), atoms);
        assert!(json["flags"]["non_unique"].is_boolean());
    }
}

#[test]
fn duplicate_and_zero_weight_atoms() {
    let space = interval(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = sparse_measure(&mut rng, 8);
    let b = sparse_measure(&mut rng, 8);
    let c = sparse_measure(&mut rng, 8);
    let plain = SecondOrderLaw::new(vec![(a.clone(), 0.5), (b.clone(), 0.5)]).unwrap();
    let padded = SecondOrderLaw::new(vec![
        (a.clone(), 0.25),
        (b.clone(), 0.5),
        (c, 0.0),
        (a, 0.25),
    ])
    .unwrap();
    let r1 = solve_barycenter(&space, &plain).unwrap();
    let r2 = solve_barycenter(&space, &padded).unwrap();
    assert!((r1.variance_value - r2.variance_value).abs() < 1e-12);
    assert_eq!(r2.per_atom_potentials.len(), 4);
}

#[test]
fn balance_on_a_two_atom_interval_law() {
    let space = interval(15);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let law = random_law(&mut rng, 15, 2);
    let bary = solve_barycenter(&space, &law).unwrap();
    let report =
        balance_potentials(&space, &law, &bary.measure, &BalanceOptions::default()).unwrap();
    assert!(report.iterations >= 1 && report.iterations <= 500);
    let weights = law.weights();
    for y in 0..15 {
        let sum: f64 = weights
            .iter()
            .zip(&report.pairs)
            .map(|(l, p)| l * p.psi[y])
            .sum();
        assert!(sum.abs() <= 1e-8);
    }
    for (a, pair) in law.atoms().iter().zip(&report.pairs) {
        assert_eq!(pair.psi[0], 0.0);
        assert!(duality_gap(&space, &bary.measure, &a.measure, pair).unwrap() <= 1e-8);
    }
    assert_eq!(report.trace.len(), report.iterations);
}

#[test]
fn balance_of_a_single_atom_law_is_zero() {
    let space = circle(12);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_measure(&mut rng, 12);
    let law = SecondOrderLaw::single(rho.clone());
    let report = balance_potentials(&space, &law, &rho, &BalanceOptions::default()).unwrap();
    assert!(report.pairs[0].psi.iter().all(|&v| v == 0.0));
    assert!(report.pairs[0].phi.iter().all(|&v| v == 0.0));

    // any starting pair collapses to zero as well
    let start = solve_w2(&space, &rho, &rho).unwrap().potentials;
    let report = balance_from(&space, &law, &rho, vec![start], &BalanceOptions::default()).unwrap();
    assert!(report.pairs[0].psi.iter().all(|&v| v == 0.0));
    assert!(report.pairs[0].phi.iter().all(|&v| v == 0.0));
}

#[test]
fn balance_ignores_constant_shifts_of_a_starting_potential() {
    let space = interval(12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let law = random_law(&mut rng, 12, 3);
    let bary = solve_barycenter(&space, &law).unwrap();
    let opts = BalanceOptions::default();
    let base = balance_potentials(&space, &law, &bary.measure, &opts).unwrap();
    let plain = balance_from(&space, &law, &bary.measure, base.pairs.clone(), &opts).unwrap();
    let mut shifted = base.pairs.clone();
    shifted[1].psi.iter_mut().for_each(|v| *v += 0.37);
    let again = balance_from(&space, &law, &bary.measure, shifted, &opts).unwrap();
    assert!(again.residual <= opts.tol);
    assert_eq!(again.iterations, plain.iterations);
    for (p, q) in plain.pairs.iter().zip(&again.pairs) {
        for (a, b) in p.psi.iter().zip(&q.psi) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn balance_rejects_a_non_barycenter() {
    let space = interval(3);
    let law = SecondOrderLaw::new(vec![
        (Measure::dirac(3, 0), 0.5),
        (Measure::dirac(3, 2), 0.5),
    ])
    .unwrap();
    let err = balance_potentials(
        &space,
        &law,
        &Measure::dirac(3, 0),
        &BalanceOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::NotBarycenter { .. }));
}

#[test]
fn balance_reports_non_convergence_with_a_trace() {
    let space = interval(10);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let law = random_law(&mut rng, 10, 2);
    let bary = solve_barycenter(&space, &law).unwrap();
    // an impossible tolerance cannot be met
    let opts = BalanceOptions {
        tol: -1.0,
        max_iters: 3,
    };
    match balance_potentials(&space, &law, &bary.measure, &opts) {
        Err(Error::NotBarycenter { .. }) => {}
        Err(Error::BalanceNonConvergence {
            iterations, trace, ..
        }) => {
            assert_eq!(iterations, 3);
            assert_eq!(trace.len(), 3);
        }
        other => panic!("unexpected {other:?}"),
    }
    let start: Vec<_> = law
        .atoms()
        .iter()
        .map(|a| {
            solve_w2(&space, &bary.measure, &a.measure)
                .unwrap()
                .potentials
        })
        .collect();
    let err = balance_from(&space, &law, &bary.measure, start, &opts).unwrap_err();
    assert!(matches!(
        err,
        Error::BalanceNonConvergence { iterations: 3, .. }
    ));
}

fn good_rho(space: &DiscreteSpace, seed: u64) -> Measure {
    let params = GoodMeasureParams::new(0.5, 2.0).unwrap();
    let all: Vec<usize> = (0..space.point_count()).collect();
    sample_good_measure(space, &params, &all, seed).unwrap()
}

#[test]
fn deficit_is_nonnegative_and_matches_raw_lp_values() {
    let space = interval(40);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..100 {
        let rho = good_rho(&space, trial);
        let mu0 = random_measure(&mut rng, 40);
        let mu1 = sparse_measure(&mut rng, 40);
        let psi0 = solve_w2(&space, &mu0, &rho).unwrap().potentials.psi;
        let d = deficit(&space, &rho, &mu0, &mu1, &psi0).unwrap();
        assert!(d >= -1e-9, "trial {trial}: {d}");
        if trial < 5 {
            let raw = lp_transport_value(&space, &mu1, &rho)
                - lp_transport_value(&space, &mu0, &rho)
                - (0..40)
                    .map(|y| psi0[y] * (mu1.weight(y) - mu0.weight(y)))
                    .sum::<f64>();
            assert!((d - raw).abs() < 1e-9, "{d} vs {raw}");
        }
    }
}

#[test]
fn deficit_identities() {
    let space = interval(20);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rho = good_rho(&space, 1);
    let mu0 = random_measure(&mut rng, 20);
    let mu1 = random_measure(&mut rng, 20);
    let psi0 = solve_w2(&space, &mu0, &rho).unwrap().potentials.psi;
    assert!(deficit(&space, &rho, &mu0, &mu0, &psi0).unwrap().abs() < 1e-15);
    let d = deficit(&space, &rho, &mu0, &mu1, &psi0).unwrap();
    for shift in [1.0, -3.5, 0.125] {
        let moved: Vec<f64> = psi0.iter().map(|v| v + shift).collect();
        let e = deficit(&space, &rho, &mu0, &mu1, &moved).unwrap();
        assert!((d - e).abs() < 1e-14, "{d} vs {e}");
    }
    let terms = deficit_terms(&space, &rho, &mu0, &mu1, &psi0).unwrap();
    assert_eq!(terms.value, terms.w_mu1 - terms.w_mu0 - terms.linear);

    // a potential for another target is rejected
    let wrong = solve_w2(&space, &mu1, &rho).unwrap().potentials.psi;
    assert!(matches!(
        deficit(&space, &rho, &mu0, &mu1, &wrong),
        Err(Error::NotOptimal(_))
    ));
}

struct LimitInstance {
    space: DiscreteSpace,
    rho: Measure,
    mu1: Measure,
    psi0: Vec<f64>,
    psi1: Vec<f64>,
    v: Vec<f64>,
}

fn limit_instance(n: usize, seed: u64) -> LimitInstance {
    let space = interval(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = good_rho(&space, seed);
    let mu0 = random_measure(&mut rng, n);
    let mu1 = random_measure(&mut rng, n);
    let psi0 = solve_w2(&space, &mu0, &rho).unwrap().potentials.psi;
    let psi1 = solve_w2(&space, &mu1, &rho).unwrap().potentials.psi;
    let v = psi1.iter().zip(&psi0).map(|(a, b)| a - b).collect();
    LimitInstance {
        space,
        rho,
        mu1,
        psi0,
        psi1,
        v,
    }
}

fn k_t(inst: &LimitInstance, heat: &barylab::HeatKernel, psi: &[f64], t: f64) -> f64 {
    regularized_functional(&inst.rho, &soft_c_transform(heat, psi, t).unwrap()).unwrap()
}

#[test]
fn regularized_identity_holds_at_each_time() {
    // K_t[ψ₁] - K_t[ψ₀] + E_{μ^t[ψ₁]}(v) = ∫₀¹ -s K_t''(s) ds
    let inst = limit_instance(30, 2);
    let cfg = HeatConfig::default();
    for t in [0.1, 0.025, 0.005] {
        let heat = heat_kernel(&inst.space, 0.5 * t, &cfg).unwrap();
        let lhs = k_t(&inst, &heat, &inst.psi1, t) - k_t(&inst, &heat, &inst.psi0, t)
            + gibbs_family(&inst.rho, &heat, &inst.psi1, t)
                .unwrap()
                .mixture_mean(&inst.v);
        // composite Simpson on 2000 panels
        let panels = 2000;
        let mut rhs = 0.0;
        for i in 0..=panels {
            let s = i as f64 / panels as f64;
            let w = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let d = k_derivatives(&inst.rho, &heat, &inst.psi0, &inst.psi1, s, t).unwrap();
            rhs += w * (-s * d.d2k_ds2);
        }
        rhs /= 3.0 * panels as f64;
        assert!(
            (lhs - rhs).abs() <= 1e-6 * lhs.abs().max(1e-3),
            "t={t}: {lhs} vs {rhs}"
        );
        assert!(lhs >= -1e-12);
    }
}

#[test]
fn regularized_limit_identity() {
    // t halves from 0.1 down to 1e-3 on 50-point intervals
    let cfg = HeatConfig::default();
    let mut failures = Vec::new();
    for seed in 0..4 {
        let inst = limit_instance(50, seed);
        let target = inst
            .rho
            .integrate(&c_transform(&inst.space, &inst.psi1).values)
            - inst
                .rho
                .integrate(&c_transform(&inst.space, &inst.psi0).values)
            + inst.mu1.integrate(&inst.v);
        let mut errors = Vec::new();
        let mut t = 0.1;
        while t >= 1e-3 {
            let heat = heat_kernel(&inst.space, 0.5 * t, &cfg).unwrap();
            let value = k_t(&inst, &heat, &inst.psi1, t) - k_t(&inst, &heat, &inst.psi0, t)
                + gibbs_family(&inst.rho, &heat, &inst.psi1, t)
                    .unwrap()
                    .mixture_mean(&inst.v);
            errors.push((value - target).abs());
            t *= 0.5;
        }
        if errors.last() >= errors.first() {
            failures.push((seed, errors));
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn modulus_lower_power_bound() {
    let space = interval(25);
    let p = ModulusParams::from_space(&space, 2.0, 1.0, 0.5, 0.5).unwrap();
    assert!((p.d_w - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(modulus(0.0, &p).unwrap(), 0.0);
    let c = p.c_sigma();
    assert!(c > 0.0);
    for i in 0..500 {
        let t = p.d_w * (i as f64 + 0.5) / 500.0;
        assert!(modulus(t, &p).unwrap() >= c * t.powf(12.0 + p.sigma) * (1.0 - 1e-9));
    }
    assert!(matches!(
        modulus(p.d_w * 1.01, &p),
        Err(Error::ModulusDomain { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variance_is_affine_in_the_law(seed in 0u64..1000, alpha in 0.0f64..1.0) {
        let space = interval(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_law(&mut rng, 8, 2);
        let q = random_law(&mut rng, 8, 3);
        let mu = random_measure(&mut rng, 8);
        let mut atoms: Vec<(Measure, f64)> = p.atoms().iter().map(|a| (a.measure.clone(), alpha * a.weight)).collect();
        atoms.extend(q.atoms().iter().map(|a| (a.measure.clone(), (1.0 - alpha) * a.weight)));
        let mix = SecondOrderLaw::new(atoms).unwrap();
        let lhs = variance(&space, &mix, &mu).unwrap();
        let rhs = alpha * variance(&space, &p, &mu).unwrap() + (1.0 - alpha) * variance(&space, &q, &mu).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn deficit_nonnegative_on_circles(seed in 0u64..1000) {
        let space = circle(16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = good_rho(&space, seed);
        let mu0 = sparse_measure(&mut rng, 16);
        let mu1 = random_measure(&mut rng, 16);
        let psi0 = solve_w2(&space, &mu0, &rho).unwrap().potentials.psi;
        prop_assert!(deficit(&space, &rho, &mu0, &mu1, &psi0).unwrap() >= -1e-8);
    }
}
