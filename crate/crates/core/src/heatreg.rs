//! Heat-kernel regularization of the c-transform.
//!
//! The kernel comes from a reversible jump generator on a symmetrized
//! k-nearest-neighbour graph with Gaussian edge weights
//! `w_ij = m_i m_j exp(-d_ij^2 / (2 h^2))` and rates `q_ij = w_ij / m_i`,
//! so `L f(i) = Σ_j q_ij (f(i) - f(j))`. By default the rates are rescaled
//! so that the median mean-squared jump rate `Σ_j q_ij d_ij^2` equals
//! `2 n`, the rate of the Laplace–Beltrami heat flow in dimension `n`;
//! without this the kernel has no reason to behave like `exp(-d^2/4t)`.
//!
//! `exp(-tL)` is computed by uniformization (a power series in a
//! nonnegative matrix) followed by repeated squaring. Every term is
//! nonnegative, so tiny entries keep full relative accuracy, which the
//! log-domain transforms rely on at small `t`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{DiscreteSpace, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatConfig {
    /// Neighbours per point before symmetrization.
    pub knn: usize,
    /// Bandwidth as a multiple of the median nearest-neighbour distance.
    pub bandwidth_factor: f64,
    /// Explicit bandwidth; overrides `bandwidth_factor`.
    pub bandwidth: Option<f64>,
    /// Rescale rates to the Laplacian mean-squared displacement.
    pub calibrate: bool,
    /// Admissible range of the regularization time for derivative queries.
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            knn: 16,
            bandwidth_factor: 2.0,
            bandwidth: None,
            calibrate: true,
            t_min: 1e-3,
            t_max: 0.2,
        }
    }
}

/// Jump rates of a reversible Markov generator on a space.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    /// Off-diagonal rates `q_ij`, row-major, zero diagonal.
    rates: Vec<f64>,
    pub bandwidth: f64,
    pub knn: usize,
    pub config: HeatConfig,
}

impl Generator {
    pub fn new(space: &DiscreteSpace, config: &HeatConfig) -> Result<Self> {
        let n = space.point_count();
        if config.knn == 0 {
            return Err(Error::InvalidParameter("knn must be positive".into()));
        }
        let knn = config.knn.min(n - 1);
        let mut adjacent = vec![false; n * n];
        let mut nearest = Vec::with_capacity(n);
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                space
                    .dist(i, a)
                    .total_cmp(&space.dist(i, b))
                    .then(a.cmp(&b))
            });
            nearest.push(space.dist(i, order[0]));
            for &j in &order[..knn] {
                adjacent[i * n + j] = true;
                adjacent[j * n + i] = true;
            }
        }
        let h = match config.bandwidth {
            Some(h) if h > 0.0 => h,
            Some(h) => return Err(Error::InvalidParameter(format!("bandwidth {h}"))),
            None => config.bandwidth_factor * median(&mut nearest),
        };
        let m = space.ref_measure();
        let mut rates = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if adjacent[i * n + j] {
                    let d = space.dist(i, j);
                    let w = m[i] * m[j] * (-d * d / (2.0 * h * h)).exp();
                    rates[i * n + j] = w / m[i];
                }
            }
        }
        let mut g = Self {
            n,
            rates,
            bandwidth: h,
            knn,
            config: *config,
        };
        g.check_connected()?;
        if config.calibrate {
            let mut msd: Vec<f64> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| g.rates[i * n + j] * space.dist(i, j).powi(2))
                        .sum()
                })
                .collect();
            let scale = 2.0 * space.dim_n() as f64 / median(&mut msd);
            g.rates.iter_mut().for_each(|q| *q *= scale);
        }
        Ok(g)
    }

    /// Uses the given symmetric edge weights as they are: `q_ij = w_ij / m_i`.
    pub fn from_edge_weights(space: &DiscreteSpace, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = space.point_count();
        let m = space.ref_measure();
        let mut rates = vec![0.0; n * n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j || w.is_nan() || w <= 0.0 {
                return Err(Error::InvalidParameter(format!("bad edge ({i}, {j}, {w})")));
            }
            rates[i * n + j] = w / m[i];
            rates[j * n + i] = w / m[j];
        }
        let g = Self {
            n,
            rates,
            bandwidth: f64::NAN,
            knn: 0,
            config: HeatConfig {
                calibrate: false,
                ..HeatConfig::default()
            },
        };
        g.check_connected()?;
        Ok(g)
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.n + j]
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.rates[i * self.n + j] > 0.0)
    }

    fn check_connected(&self) -> Result<()> {
        let mut label = vec![usize::MAX; self.n];
        let mut components: Vec<Vec<usize>> = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            label[start] = id;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbours(u) {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        if components.len() == 1 {
            return Ok(());
        }
        let described: Vec<String> = components
            .iter()
            .map(|c| {
                let head: Vec<String> = c.iter().take(6).map(|i| i.to_string()).collect();
                let more = if c.len() > 6 { ", ..." } else { "" };
                format!("{{{}{more}}} ({} points)", head.join(", "), c.len())
            })
            .collect();
        Err(Error::Disconnected(format!(
            "{} components: {}",
            components.len(),
            described.join("; ")
        )))
    }

    /// Largest number of edges on a shortest hop path.
    fn hop_diameter(&self) -> usize {
        let mut worst = 0;
        for s in 0..self.n {
            let mut hops = vec![usize::MAX; self.n];
            hops[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbours(u) {
                    if hops[v] == usize::MAX {
                        hops[v] = hops[u] + 1;
                        worst = worst.max(hops[v]);
                        queue.push_back(v);
                    }
                }
            }
        }
        worst
    }

    /// Transition matrix `exp(-tL)` (rows sum to one).
    pub fn transition(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::NonPositiveTime(t));
        }
        let n = self.n;
        let out: Vec<f64> = (0..n)
            .map(|i| self.rates[i * n..(i + 1) * n].iter().sum())
            .collect();
        let lambda = out.iter().cloned().fold(0.0, f64::max);
        if lambda == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        // P = I - L / Λ is stochastic and nonnegative
        let mut p = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = self.rates[i * n + j] / lambda;
            }
            p[(i, i)] = 1.0 - out[i] / lambda;
        }
        let squarings = (2.0 * lambda * t).log2().ceil().max(0.0) as i32;
        let tau = lambda * t / 2f64.powi(squarings);
        // exp(τ(P - I)) = e^{-τ} Σ_k τ^k P^k / k!, enough terms that every
        // entry reachable in `hop_diameter` steps is resolved
        let terms = self.hop_diameter() + 30;
        let mut sum = DMatrix::<f64>::identity(n, n);
        let mut term = DMatrix::<f64>::identity(n, n);
        for k in 1..=terms {
            term = (&term * &p) * (tau / k as f64);
            sum += &term;
        }
        sum *= (-tau).exp();
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        // restore exact stochasticity lost to roundoff
        for i in 0..n {
            let s: f64 = sum.row(i).iter().sum();
            for j in 0..n {
                sum[(i, j)] /= s;
            }
        }
        Ok(sum)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Heat kernel at a fixed time, stored as a density against the reference
/// measure.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub t: f64,
    n: usize,
    /// `p_t(x, y)`, row-major.
    density: Vec<f64>,
    /// `ln(p_t(x, y) m(y))`, the log transition probabilities.
    log_transition: Vec<f64>,
    pub bandwidth: f64,
    pub knn: usize,
    pub config: HeatConfig,
}

impl HeatKernel {
    pub fn from_generator(space: &DiscreteSpace, generator: &Generator, t: f64) -> Result<Self> {
        let n = space.point_count();
        let p = generator.transition(t)?;
        let m = space.ref_measure();
        let mut density = vec![0.0; n * n];
        let mut log_transition = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                // average the two reversible representations for exact symmetry
                let a = p[(x, y)] / m[y];
                let b = p[(y, x)] / m[x];
                let d = 0.5 * (a + b);
                density[x * n + y] = d;
                log_transition[x * n + y] = (p[(x, y)]).ln();
            }
        }
        Ok(Self {
            t,
            n,
            density,
            log_transition,
            bandwidth: generator.bandwidth,
            knn: generator.knn,
            config: generator.config,
        })
    }

    pub fn density(&self, x: usize, y: usize) -> f64 {
        self.density[x * self.n + y]
    }

    pub fn density_row(&self, x: usize) -> &[f64] {
        &self.density[x * self.n..(x + 1) * self.n]
    }

    pub fn log_transition_row(&self, x: usize) -> &[f64] {
        &self.log_transition[x * self.n..(x + 1) * self.n]
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    /// Kernel dump `{t, bandwidth, knn, kernel}` with the density matrix
    /// as a list of rows.
    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<&[f64]> = (0..self.n).map(|x| self.density_row(x)).collect();
        Ok(serde_json::to_string(&serde_json::json!({
            "t": self.t,
            "bandwidth": self.bandwidth,
            "knn": self.knn,
            "kernel": rows,
        }))?)
    }

    pub fn from_json(s: &str, space: &DiscreteSpace) -> Result<Self> {
        #[derive(Deserialize)]
        struct Dump {
            t: f64,
            bandwidth: Option<f64>,
            knn: usize,
            kernel: Vec<Vec<f64>>,
        }
        let d: Dump = serde_json::from_str(s)?;
        let n = space.point_count();
        if d.kernel.len() != n || d.kernel.iter().any(|r| r.len() != n) {
            return Err(Error::SpaceMismatch(d.kernel.len(), n));
        }
        let m = space.ref_measure();
        let density: Vec<f64> = d.kernel.concat();
        let log_transition = (0..n * n).map(|k| (density[k] * m[k % n]).ln()).collect();
        Ok(Self {
            t: d.t,
            n,
            density,
            log_transition,
            bandwidth: d.bandwidth.unwrap_or(f64::NAN),
            knn: d.knn,
            config: HeatConfig::default(),
        })
    }
}

/// Builds the heat kernel at time `t` with the given graph settings.
pub fn heat_kernel(space: &DiscreteSpace, t: f64, config: &HeatConfig) -> Result<HeatKernel> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let g = Generator::new(space, config)?;
    HeatKernel::from_generator(space, &g, t)
}

fn check_time(heat: &HeatKernel, t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    if (heat.t - 0.5 * t).abs() > 1e-12 * t {
        return Err(Error::TimeMismatch {
            kernel: heat.t,
            needed: 0.5 * t,
        });
    }
    Ok(())
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `Φ_t[ψ](x) = -t ln Σ_y exp(ψ(y)/t) p_{t/2}(x, y) m(y)`; `heat` must be
/// built at time `t/2`.
pub fn soft_c_transform(heat: &HeatKernel, psi: &[f64], t: f64) -> Result<Vec<f64>> {
    check_time(heat, t)?;
    check_len(heat.n, psi.len())?;
    Ok((0..heat.n)
        .map(|x| {
            let row = heat.log_transition_row(x);
            -t * log_sum_exp(psi.iter().zip(row).map(|(p, l)| p / t + l))
        })
        .collect())
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// `K_t = Σ_x ρ(x) Φ_t(x)`.
pub fn regularized_functional(rho: &Measure, phi_t: &[f64]) -> Result<f64> {
    check_len(rho.len(), phi_t.len())?;
    Ok(rho.integrate(phi_t))
}

/// Gibbs measures `μ_x ∝ exp(ψ/t) p_{t/2}(x, ·) m` and their ρ-mixture.
#[derive(Debug, Clone)]
pub struct GibbsFamily {
    pub t: f64,
    pub psi: Vec<f64>,
    n: usize,
    rows: Vec<f64>,
    pub mixture: Vec<f64>,
}

impl GibbsFamily {
    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.n..(x + 1) * self.n]
    }

    pub fn mean(&self, x: usize, v: &[f64]) -> f64 {
        self.row(x).iter().zip(v).map(|(p, f)| p * f).sum()
    }

    pub fn variance(&self, x: usize, v: &[f64]) -> f64 {
        let mean = self.mean(x, v);
        self.row(x)
            .iter()
            .zip(v)
            .map(|(p, f)| p * (f - mean).powi(2))
            .sum()
    }

    pub fn mixture_mean(&self, v: &[f64]) -> f64 {
        self.mixture.iter().zip(v).map(|(p, f)| p * f).sum()
    }
}

pub fn gibbs_family(rho: &Measure, heat: &HeatKernel, psi: &[f64], t: f64) -> Result<GibbsFamily> {
    check_time(heat, t)?;
    check_len(heat.n, psi.len())?;
    check_len(heat.n, rho.len())?;
    let n = heat.n;
    let mut rows = vec![0.0; n * n];
    for x in 0..n {
        let lt = heat.log_transition_row(x);
        let logits: Vec<f64> = psi.iter().zip(lt).map(|(p, l)| p / t + l).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let row = &mut rows[x * n..(x + 1) * n];
        let mut total = 0.0;
        for (r, l) in row.iter_mut().zip(&logits) {
            *r = (l - max).exp();
            total += *r;
        }
        row.iter_mut().for_each(|r| *r /= total);
    }
    let mut mixture = vec![0.0; n];
    for &x in rho.support() {
        let w = rho.weight(x);
        for (m, r) in mixture.iter_mut().zip(&rows[x * n..(x + 1) * n]) {
            *m += w * r;
        }
    }
    Ok(GibbsFamily {
        t,
        psi: psi.to_vec(),
        n,
        rows,
        mixture,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KDerivatives {
    pub dk_ds: f64,
    pub d2k_ds2: f64,
}

fn interpolate(psi0: &[f64], psi1: &[f64], s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::SOutOfRange(s));
    }
    check_len(psi0.len(), psi1.len())?;
    let v: Vec<f64> = psi1.iter().zip(psi0).map(|(a, b)| a - b).collect();
    let psi_s = psi0.iter().zip(&v).map(|(p, d)| p + s * d).collect();
    Ok((psi_s, v))
}

fn check_range(heat: &HeatKernel, t: f64) -> Result<()> {
    let (min, max) = (heat.config.t_min, heat.config.t_max);
    if t < min || t > max {
        return Err(Error::TimeOutOfRange { t, min, max });
    }
    Ok(())
}

/// First and second derivatives in `s` of `K_t[ψ₀ + s(ψ₁ - ψ₀)]`:
/// `-E_{μ^t}(v)` and `-(1/t) Σ_x ρ(x) Var_{μ_x^t}(v)`.
pub fn k_derivatives(
    rho: &Measure,
    heat: &HeatKernel,
    psi0: &[f64],
    psi1: &[f64],
    s: f64,
    t: f64,
) -> Result<KDerivatives> {
    check_range(heat, t)?;
    let (psi_s, v) = interpolate(psi0, psi1, s)?;
    let g = gibbs_family(rho, heat, &psi_s, t)?;
    let var: f64 = rho
        .support()
        .iter()
        .map(|&x| rho.weight(x) * g.variance(x, &v))
        .sum();
    Ok(KDerivatives {
        dk_ds: -g.mixture_mean(&v),
        d2k_ds2: -var / t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Concentration {
    /// `Σ_x ρ(x) |E_{μ_x}(v) - E_{μ}(v)|`.
    pub lhs: f64,
    /// `t^{-1/2} (Σ_x ρ(x) Var_{μ_x}(v))^{1/2}`.
    pub rhs_core: f64,
    /// `lhs / rhs_core`; `None` when the variance vanishes.
    pub kappa_hat: Option<f64>,
}

pub fn concentration_ratio(
    rho: &Measure,
    heat: &HeatKernel,
    psi0: &[f64],
    psi1: &[f64],
    s: f64,
    t: f64,
) -> Result<Concentration> {
    check_range(heat, t)?;
    let (psi_s, v) = interpolate(psi0, psi1, s)?;
    let g = gibbs_family(rho, heat, &psi_s, t)?;
    let overall = g.mixture_mean(&v);
    let mut lhs = 0.0;
    let mut var = 0.0;
    for &x in rho.support() {
        let w = rho.weight(x);
        lhs += w * (g.mean(x, &v) - overall).abs();
        var += w * g.variance(x, &v);
    }
    let rhs_core = (var / t).sqrt();
    let constant = {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= 1e-12 * hi.abs().max(1.0)
    };
    if constant {
        return Ok(Concentration {
            lhs: 0.0,
            rhs_core,
            kappa_hat: None,
        });
    }
    Ok(Concentration {
        lhs,
        rhs_core,
        kappa_hat: (rhs_core > 0.0).then(|| lhs / rhs_core),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{build_model_space, Layout, ModelSpec};

    fn two_points() -> DiscreteSpace {
        DiscreteSpace::new(
            "pair",
            1,
            0.0,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 1.0],
            None,
            Layout::Custom,
        )
        .unwrap()
    }

    #[test]
    fn two_point_closed_form() {
        let s = two_points();
        let g = Generator::from_edge_weights(&s, &[(0, 1, 1.0)]).unwrap();
        let k = HeatKernel::from_generator(&s, &g, 1.0).unwrap();
        let diag = (1.0 + (-2.0f64).exp()) / 2.0;
        assert!((k.density(0, 0) - diag).abs() < 1e-14);
        assert!((k.density(0, 1) - (1.0 - diag)).abs() < 1e-14);
    }

    #[test]
    fn soft_transform_two_point_hand_value() {
        let s = two_points();
        let g = Generator::from_edge_weights(&s, &[(0, 1, 1.0)]).unwrap();
        let t = 0.5;
        let k = HeatKernel::from_generator(&s, &g, t / 2.0).unwrap();
        let psi = [0.0, 0.3];
        let phi = soft_c_transform(&k, &psi, t).unwrap();
        // p_{1/4}: stay with probability (1 + e^{-1/2}) / 2
        let stay = (1.0 + (-0.5f64).exp()) / 2.0;
        let x0 = -t * (stay + (0.3f64 / t).exp() * (1.0 - stay)).ln();
        let x1 = -t * ((1.0 - stay) + (0.3f64 / t).exp() * stay).ln();
        assert!((phi[0] - x0).abs() < 1e-12);
        assert!((phi[1] - x1).abs() < 1e-12);
    }

    #[test]
    fn time_mismatch_is_rejected() {
        let s = two_points();
        let g = Generator::from_edge_weights(&s, &[(0, 1, 1.0)]).unwrap();
        let k = HeatKernel::from_generator(&s, &g, 0.5).unwrap();
        assert!(matches!(
            soft_c_transform(&k, &[0.0, 0.0], 0.5),
            Err(Error::TimeMismatch { .. })
        ));
        assert!(matches!(
            heat_kernel(&s, 0.0, &HeatConfig::default()),
            Err(Error::NonPositiveTime(_))
        ));
    }

    #[test]
    fn disconnected_graph_names_components() {
        let s = two_points();
        let e = Generator::from_edge_weights(&s, &[]).unwrap_err();
        let Error::Disconnected(msg) = e else {
            panic!("{e:?}")
        };
        assert!(msg.contains("2 components"), "{msg}");
    }

    #[test]
    fn knn_graph_splits_distant_clusters() {
        let mut dist = vec![0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                let (a, b) = (
                    i as f64 + if i >= 3 { 100.0 } else { 0.0 },
                    j as f64 + if j >= 3 { 100.0 } else { 0.0 },
                );
                dist[i * 6 + j] = (a - b).abs();
            }
        }
        let s =
            DiscreteSpace::new("split", 1, 0.0, dist, vec![1.0; 6], None, Layout::Custom).unwrap();
        let cfg = HeatConfig {
            knn: 2,
            ..HeatConfig::default()
        };
        assert!(matches!(
            heat_kernel(&s, 0.1, &cfg),
            Err(Error::Disconnected(_))
        ));
    }

    #[test]
    fn rows_integrate_to_one_and_symmetric() {
        let s = build_model_space(&ModelSpec::Sphere { radius: 1.0 }, 40).unwrap();
        let k = heat_kernel(&s, 0.05, &HeatConfig::default()).unwrap();
        for x in 0..40 {
            let mass: f64 = k
                .density_row(x)
                .iter()
                .zip(s.ref_measure())
                .map(|(p, m)| p * m)
                .sum();
            assert!((mass - 1.0).abs() < 1e-9);
            for y in 0..40 {
                assert!(k.density(x, y) >= 0.0);
                assert!((k.density(x, y) - k.density(y, x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_potential_maps_to_minus_constant() {
        let s = build_model_space(&ModelSpec::Interval { length: 1.0 }, 20).unwrap();
        let t = 0.1;
        let k = heat_kernel(&s, t / 2.0, &HeatConfig::default()).unwrap();
        let phi = soft_c_transform(&k, &[0.7; 20], t).unwrap();
        for p in phi {
            assert!((p + 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_edge_cases() {
        let s = build_model_space(&ModelSpec::Interval { length: 1.0 }, 15).unwrap();
        let t = 0.05;
        let k = heat_kernel(&s, t / 2.0, &HeatConfig::default()).unwrap();
        let rho = Measure::uniform(&s);
        let psi0: Vec<f64> = (0..15).map(|i| (i as f64 * 0.3).sin() * 0.1).collect();
        let d = k_derivatives(&rho, &k, &psi0, &psi0, 0.4, t).unwrap();
        assert_eq!(d.dk_ds, 0.0);
        assert_eq!(d.d2k_ds2, 0.0);
        let shifted: Vec<f64> = psi0.iter().map(|p| p + 0.25).collect();
        let d = k_derivatives(&rho, &k, &psi0, &shifted, 0.4, t).unwrap();
        assert!((d.dk_ds + 0.25).abs() < 1e-12);
        assert!(d.d2k_ds2.abs() < 1e-12);
        let c = concentration_ratio(&rho, &k, &psi0, &shifted, 0.4, t).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.kappa_hat.is_none());
        assert!(matches!(
            k_derivatives(&rho, &k, &psi0, &shifted, 0.4, 0.5),
            Err(Error::TimeOutOfRange { .. })
        ));
    }
}
