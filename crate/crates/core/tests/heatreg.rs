use barylab::heatreg::{
    concentration_ratio, gibbs_family, heat_kernel, k_derivatives, regularized_functional,
    soft_c_transform, HeatConfig,
};
use barylab::spaces::{build_model_space, sample_good_measure, ModelSpec};
use barylab::transport::{c_transform, solve_w2};
use barylab::{DiscreteSpace, GoodMeasureParams, Measure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval(n: usize) -> DiscreteSpace {
    build_model_space(&ModelSpec::Interval { length: 1.0 }, n).unwrap()
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    Measure::normalized((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn k_value(
    rho: &Measure,
    heat: &barylab::HeatKernel,
    psi0: &[f64],
    psi1: &[f64],
    s: f64,
    t: f64,
) -> f64 {
    let psi: Vec<f64> = psi0
        .iter()
        .zip(psi1)
        .map(|(a, b)| a + s * (b - a))
        .collect();
    regularized_functional(rho, &soft_c_transform(heat, &psi, t).unwrap()).unwrap()
}

#[test]
fn semigroup_property() {
    let space = build_model_space(&ModelSpec::Circle { circumference: 1.0 }, 30).unwrap();
    let cfg = HeatConfig::default();
    let m = space.ref_measure();
    for &(a, b) in &[(0.1, 0.1), (0.1, 0.2), (0.2, 0.2)] {
        let ka = heat_kernel(&space, a, &cfg).unwrap();
        let kb = heat_kernel(&space, b, &cfg).unwrap();
        let kab = heat_kernel(&space, a + b, &cfg).unwrap();
        for x in 0..30 {
            for z in 0..30 {
                let composed: f64 = (0..30)
                    .map(|y| ka.density(x, y) * kb.density(y, z) * m[y])
                    .sum();
                assert!(
                    (composed - kab.density(x, z)).abs() < 1e-7,
                    "{a} {b} {x} {z}"
                );
            }
        }
    }
}

#[test]
fn off_diagonal_mass_shrinks_with_time() {
    let space = interval(25);
    let cfg = HeatConfig::default();
    let m = space.ref_measure();
    let mut last = vec![f64::INFINITY; 25];
    let mut first = Vec::new();
    for k in 0..=10 {
        let t = 0.5f64.powi(k);
        let heat = heat_kernel(&space, t, &cfg).unwrap();
        for x in 0..25 {
            let off = 1.0 - heat.density(x, x) * m[x];
            assert!(off < last[x], "t={t} x={x}");
            last[x] = off;
        }
        if k == 0 {
            first = last.clone();
        }
    }
    for (a, b) in last.iter().zip(&first) {
        assert!(*a < 0.5 * b);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let space = interval(20);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = HeatConfig::default();
    for &t in &[0.2, 0.05, 0.01] {
        let heat = heat_kernel(&space, t / 2.0, &cfg).unwrap();
        for _ in 0..6 {
            let rho = random_measure(&mut rng, 20);
            let psi0 = solve_w2(&space, &random_measure(&mut rng, 20), &rho)
                .unwrap()
                .potentials
                .psi;
            let psi1 = solve_w2(&space, &random_measure(&mut rng, 20), &rho)
                .unwrap()
                .potentials
                .psi;
            let s = rng.random_range(0.1..0.9);
            let d = k_derivatives(&rho, &heat, &psi0, &psi1, s, t).unwrap();
            let h1 = 1e-5;
            let fd1 = (k_value(&rho, &heat, &psi0, &psi1, s + h1, t)
                - k_value(&rho, &heat, &psi0, &psi1, s - h1, t))
                / (2.0 * h1);
            let h2 = 1e-4;
            let fd2 = (k_value(&rho, &heat, &psi0, &psi1, s + h2, t)
                - 2.0 * k_value(&rho, &heat, &psi0, &psi1, s, t)
                + k_value(&rho, &heat, &psi0, &psi1, s - h2, t))
                / (h2 * h2);
            let r1 = (d.dk_ds - fd1).abs() / d.dk_ds.abs();
            let r2 = (d.d2k_ds2 - fd2).abs() / d.d2k_ds2.abs();
            println!("t={t} r1={r1:e} r2={r2:e}");
            assert!(r1 <= 1e-5, "t={t}: {} vs {fd1}", d.dk_ds);
            assert!(r2 <= 1e-4, "t={t}: {} vs {fd2}", d.d2k_ds2);
        }
    }
}

#[test]
fn soft_transform_approaches_hard_transform() {
    let space = interval(50);
    let cfg = HeatConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ts = [0.1, 0.05, 0.025, 0.0125];
    let kernels: Vec<_> = ts
        .iter()
        .map(|t| heat_kernel(&space, t / 2.0, &cfg).unwrap())
        .collect();
    for _ in 0..5 {
        let rho = random_measure(&mut rng, 50);
        let psi = solve_w2(&space, &random_measure(&mut rng, 50), &rho)
            .unwrap()
            .potentials
            .psi;
        let hard = c_transform(&space, &psi).values;
        let errs: Vec<f64> = ts
            .iter()
            .zip(&kernels)
            .map(|(&t, k)| {
                let soft = soft_c_transform(k, &psi, t).unwrap();
                soft.iter()
                    .zip(&hard)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        println!("{errs:?}");
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }
}

#[test]
fn soft_transform_bounds_and_shift() {
    let space = build_model_space(&ModelSpec::Sphere { radius: 1.0 }, 30).unwrap();
    let cfg = HeatConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for &t in &[0.2, 0.02] {
        let heat = heat_kernel(&space, t / 2.0, &cfg).unwrap();
        for _ in 0..5 {
            let psi: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let phi = soft_c_transform(&heat, &psi, t).unwrap();
            let max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (x, p) in phi.iter().enumerate() {
                assert!(p.is_finite());
                assert!(*p >= -max - 1e-12);
                let stay = heat.density(x, x) * space.ref_measure()[x];
                assert!(*p <= -psi[x] - t * stay.ln() + 1e-12);
            }
            let shifted: Vec<f64> = psi.iter().map(|v| v + 2.5).collect();
            let phi2 = soft_c_transform(&heat, &shifted, t).unwrap();
            for (a, b) in phi.iter().zip(&phi2) {
                assert!((b - (a - 2.5)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn gibbs_rows_and_mixture() {
    let space = interval(10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = 0.1;
    let heat = heat_kernel(&space, t / 2.0, &HeatConfig::default()).unwrap();
    let rho = random_measure(&mut rng, 10);
    let psi: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
    let g = gibbs_family(&rho, &heat, &psi, t).unwrap();
    let mut mix = [0.0; 10];
    for x in 0..10 {
        let row = g.row(x);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // direct (unstabilized) evaluation at this moderate t
        let raw: Vec<f64> = (0..10)
            .map(|y| (psi[y] / t).exp() * heat.density(x, y) * space.ref_measure()[y])
            .collect();
        let z: f64 = raw.iter().sum();
        for (y, m) in mix.iter_mut().enumerate() {
            assert!((row[y] - raw[y] / z).abs() < 1e-12);
            *m += rho.weight(x) * row[y];
        }
    }
    for (got, want) in g.mixture.iter().zip(&mix) {
        assert!((got - want).abs() < 1e-12);
    }
    // zero potential: rows are the transition probabilities
    let g0 = gibbs_family(&rho, &heat, &[0.0; 10], t).unwrap();
    for y in 0..10 {
        assert!((g0.row(3)[y] - heat.density(3, y) * space.ref_measure()[y]).abs() < 1e-12);
    }
    let phi = soft_c_transform(&heat, &psi, t).unwrap();
    let direct: f64 = (0..10).map(|x| rho.weight(x) * phi[x]).sum();
    assert!((regularized_functional(&rho, &phi).unwrap() - direct).abs() < 1e-12);
    assert!(
        regularized_functional(&rho, &soft_c_transform(&heat, &[0.0; 10], t).unwrap())
            .unwrap()
            .abs()
            < 1e-15
    );
}

#[test]
fn kappa_hat_table() {
    let space = interval(30);
    let params = GoodMeasureParams::new(0.5, 2.0).unwrap();
    let all: Vec<usize> = (0..30).collect();
    let rho = sample_good_measure(&space, &params, &all, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi0 = solve_w2(&space, &random_measure(&mut rng, 30), &rho)
        .unwrap()
        .potentials
        .psi;
    let psi1 = solve_w2(&space, &random_measure(&mut rng, 30), &rho)
        .unwrap()
        .potentials
        .psi;
    for &t in &[0.2, 0.1, 0.05] {
        let heat = heat_kernel(&space, t / 2.0, &HeatConfig::default()).unwrap();
        let c = concentration_ratio(&rho, &heat, &psi0, &psi1, 0.5, t).unwrap();
        let kappa = c.kappa_hat.unwrap();
        assert!(kappa.is_finite() && kappa > 0.0);
        assert!(c.lhs <= kappa * c.rhs_core * (1.0 + 1e-12));
    }
}
