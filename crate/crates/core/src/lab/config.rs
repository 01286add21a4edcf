//! TOML experiment configs, their defaults, and dispatch to the drivers.
//!
//! A config file names its `experiment`; every key it omits is taken from
//! [`ExperimentConfig::default_for`] that experiment (tables merge key by
//! key; a table whose `kind` changes is replaced whole).

use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::deficit_scan::{deficit_scan, DeficitScanConfig};
use super::empirical::{empirical_rate_experiment, EmpiricalConfig};
use super::nets::{fit_entropy_constant, wasserstein_net, NetConfig, NetResult};
use super::perturb::{LawPerturbation, Perturbation};
use super::probes::{
    g_probe, map_stability_probe, potential_stability_probe, random_pairs, GProbeInput,
};
use super::stability::{barycenter_stability_scan, StabilityConfig};
use super::{job_seed, Budget, ScanReport, ScanRow};
use crate::error::{Error, Result};
use crate::heatreg::{concentration_ratio, heat_kernel, HeatConfig, HeatKernel};
use crate::spaces::{
    build_model_space, sample_good_measure, DiscreteSpace, GoodMeasureParams, LawAtom, Measure,
    ModelSpec, SecondOrderLaw,
};
use crate::transport::solve_w2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DeficitScan,
    GProbe,
    PotentialStability,
    MapStability,
    BarycenterStability,
    EmpiricalRate,
    WassersteinNet,
    KappaScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::DeficitScan,
        Self::GProbe,
        Self::PotentialStability,
        Self::MapStability,
        Self::BarycenterStability,
        Self::EmpiricalRate,
        Self::WassersteinNet,
        Self::KappaScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DeficitScan => "deficit_scan",
            Self::GProbe => "g_probe",
            Self::PotentialStability => "potential_stability",
            Self::MapStability => "map_stability",
            Self::BarycenterStability => "barycenter_stability",
            Self::EmpiricalRate => "empirical_rate",
            Self::WassersteinNet => "wasserstein_net",
            Self::KappaScan => "kappa_scan",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{name}'")))
    }
}

/// A model space and its resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub resolution: usize,
}

/// How to obtain a measure on the configured space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// The normalized reference measure.
    Uniform,
    Dirac {
        at: usize,
    },
    /// Nonnegative weights, normalized.
    Weights {
        weights: Vec<f64>,
    },
    /// A random measure within the config's `good` density bounds.
    Good {
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Vec<usize>>,
    },
    /// A measure file as written by `barylab measure`.
    File {
        path: String,
    },
}

impl MeasureSpec {
    pub fn build(&self, space: &DiscreteSpace, good: &GoodMeasureParams) -> Result<Measure> {
        let n = space.point_count();
        match self {
            Self::Uniform => Ok(Measure::uniform(space)),
            Self::Dirac { at } => {
                if *at >= n {
                    return Err(Error::Config(format!("dirac site {at} out of range")));
                }
                Ok(Measure::dirac(n, *at))
            }
            Self::Weights { weights } => {
                if weights.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: weights.len(),
                    });
                }
                Measure::normalized(weights.clone())
            }
            Self::Good { seed, domain } => {
                let all: Vec<usize> = (0..n).collect();
                sample_good_measure(space, good, domain.as_deref().unwrap_or(&all), *seed)
            }
            Self::File { path } => Measure::from_file_json(&std::fs::read_to_string(path)?, space),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub measure: MeasureSpec,
    pub weight: f64,
}

/// How to obtain a second-order law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    Atoms {
        atoms: Vec<AtomSpec>,
    },
    /// `count` equally weighted full-support good atoms drawn with seeds
    /// `seed, seed + 1, ...`, flagged with the config's `good` bounds.
    Good {
        count: usize,
        seed: u64,
    },
    /// A law file (JSON of `SecondOrderLaw`).
    File {
        path: String,
    },
}

impl LawSpec {
    pub fn build(&self, space: &DiscreteSpace, good: &GoodMeasureParams) -> Result<SecondOrderLaw> {
        let law = match self {
            Self::Atoms { atoms } => SecondOrderLaw::new(
                atoms
                    .iter()
                    .map(|a| Ok((a.measure.build(space, good)?, a.weight)))
                    .collect::<Result<_>>()?,
            )?,
            Self::Good { count, seed } => {
                let all: Vec<usize> = (0..space.point_count()).collect();
                SecondOrderLaw::from_atoms(
                    (0..*count as u64)
                        .map(|k| {
                            Ok(LawAtom {
                                measure: sample_good_measure(space, good, &all, seed + k)?,
                                weight: 1.0,
                                good: Some(*good),
                            })
                        })
                        .collect::<Result<_>>()?,
                )?
            }
            Self::File { path } => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        };
        law.check_on(space)?;
        Ok(law)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Residual and duality-gap tolerance of the balance loop.
    pub balance: f64,
    /// Slack below zero allowed for the deficit.
    pub deficit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            balance: 1e-8,
            deficit: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: String,
    /// Also write SVG plots next to the CSV.
    pub svg: bool,
}

/// Everything a run needs. Fields an experiment does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub sigma: f64,
    pub space: SpaceSpec,
    /// Density bounds for `good` measures and laws.
    pub good: GoodMeasureParams,
    pub rho: MeasureSpec,
    pub mu0: MeasureSpec,
    pub mu1: MeasureSpec,
    pub law: LawSpec,
    pub perturbation: Perturbation,
    pub law_perturbation: LawPerturbation,
    pub scales: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    /// Random measure pairs for the stability probes.
    pub pairs: usize,
    /// Points of the uniform `s` grid of the g probe.
    pub s_points: usize,
    pub epsilons: Vec<f64>,
    pub net_cap: usize,
    pub probes: usize,
    /// Regularization times of the κ scan.
    pub times: Vec<f64>,
    pub heat: HeatConfig,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
    /// Wall-clock cap in seconds; unfinished jobs are dropped and the
    /// report is marked partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_cap_secs: Option<f64>,
}

fn dyadic(first: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| first / 2f64.powi(k as i32)).collect()
}

impl ExperimentConfig {
    /// The shipped default configuration of an experiment.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let interval = |resolution| SpaceSpec {
            model: ModelSpec::Interval { length: 1.0 },
            resolution,
        };
        let circle = |resolution| SpaceSpec {
            model: ModelSpec::Circle { circumference: 1.0 },
            resolution,
        };
        let mut c = Self {
            experiment: kind,
            seed: 1,
            sigma: 0.5,
            space: interval(40),
            good: GoodMeasureParams::new(0.5, 2.0).expect("valid bounds"),
            rho: MeasureSpec::Uniform,
            mu0: MeasureSpec::Good {
                seed: 11,
                domain: None,
            },
            mu1: MeasureSpec::Good {
                seed: 12,
                domain: None,
            },
            law: LawSpec::Good { count: 3, seed: 21 },
            perturbation: Perturbation::MassShift { from: 10, to: 30 },
            law_perturbation: LawPerturbation::AtomJitter { max_steps: 2 },
            scales: dyadic(0.8, 8),
            n_list: (3..=9).map(|k| 1 << k).collect(),
            trials: 20,
            pairs: 30,
            s_points: 200,
            epsilons: vec![0.5, 0.4, 0.3],
            net_cap: 200_000,
            probes: 500,
            times: vec![0.2, 0.1, 0.05],
            heat: HeatConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputSpec {
                dir: format!("out/{}", kind.name()),
                svg: true,
            },
            runtime_cap_secs: None,
        };
        match kind {
            ExperimentKind::DeficitScan => {
                // linearize at μ₀ = ρ: for a generic μ₀ the discrete
                // deficit vanishes identically below the grid scale
                c.mu0 = MeasureSpec::Uniform;
                c.scales = dyadic(0.8, 12);
                c.scales.push(0.0);
            }
            ExperimentKind::GProbe | ExperimentKind::MapStability | ExperimentKind::KappaScan => {}
            ExperimentKind::PotentialStability => c.space = circle(60),
            ExperimentKind::BarycenterStability => c.space = interval(30),
            ExperimentKind::EmpiricalRate => {
                c.space = interval(20);
                c.law = LawSpec::Good { count: 4, seed: 31 };
            }
            ExperimentKind::WassersteinNet => c.space = circle(16),
        }
        c
    }

    /// Parses a TOML config, filling omitted keys from the defaults of its
    /// experiment.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let kind = match user.get("experiment") {
            Some(toml::Value::String(s)) => ExperimentKind::from_name(s)?,
            Some(_) => return Err(Error::Config("'experiment' must be a string".into())),
            None => return Err(Error::Config("missing 'experiment'".into())),
        };
        let mut base = toml::Value::try_from(Self::default_for(kind))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, toml::Value::Table(user));
        let cfg: Self = base
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tolerances.balance", self.tolerances.balance)?;
        positive("tolerances.deficit", self.tolerances.deficit)?;
        positive("sigma", self.sigma)?;
        if let Some(cap) = self.runtime_cap_secs {
            positive("runtime_cap_secs", cap)?;
        }
        self.good.validate()?;
        if self.space.resolution < 2 {
            return Err(Error::InvalidResolution(self.space.resolution));
        }
        match self.experiment {
            ExperimentKind::DeficitScan | ExperimentKind::BarycenterStability
                if self.scales.is_empty() =>
            {
                Err(Error::Config("scales must not be empty".into()))
            }
            ExperimentKind::EmpiricalRate if self.n_list.is_empty() || self.trials == 0 => {
                Err(Error::Config("n_list and trials must be nonempty".into()))
            }
            ExperimentKind::WassersteinNet if self.epsilons.is_empty() => {
                Err(Error::Config("epsilons must not be empty".into()))
            }
            ExperimentKind::GProbe if self.s_points < 2 => {
                Err(Error::Config("s_points must be at least 2".into()))
            }
            ExperimentKind::KappaScan if self.times.is_empty() => {
                Err(Error::Config("times must not be empty".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build_space(&self) -> Result<DiscreteSpace> {
        build_model_space(&self.space.model, self.space.resolution)
    }

    pub fn runtime_cap(&self) -> Option<Duration> {
        self.runtime_cap_secs.map(Duration::from_secs_f64)
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            let kind_changed =
                matches!((b.get("kind"), o.get("kind")), (Some(x), Some(y)) if x != y);
            if kind_changed {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Hex SHA-256 of the compact JSON form (keys sorted).
pub fn config_hash(config: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Directory for cached heat kernels.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ScanReport,
    /// Nets of a `wasserstein_net` run.
    pub nets: Vec<NetResult>,
}

/// Runs a configured experiment on a pool of `opts.jobs` threads. The
/// report's `config` holds the full experiment config.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut out = pool.install(|| dispatch(config, opts))?;
    let driver = std::mem::take(&mut out.report.config);
    out.report.config = serde_json::json!({ "experiment": config, "driver": driver });
    Ok(out)
}

fn dispatch(c: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let space = c.build_space()?;
    let budget = Budget::new(c.runtime_cap());
    let measure = |m: &MeasureSpec| m.build(&space, &c.good);
    let report = match c.experiment {
        ExperimentKind::DeficitScan => {
            let cfg = DeficitScanConfig {
                family: c.perturbation,
                scales: c.scales.clone(),
                good: c.good,
                tolerance: c.tolerances.deficit,
            };
            deficit_scan(
                &space,
                &measure(&c.rho)?,
                &measure(&c.mu0)?,
                &cfg,
                c.seed,
                &budget,
            )?
        }
        ExperimentKind::GProbe => {
            let rho = measure(&c.rho)?;
            let (mu0, mu1) = (measure(&c.mu0)?, measure(&c.mu1)?);
            let psi0 = solve_w2(&space, &mu0, &rho)?.potentials.psi;
            let psi1 = solve_w2(&space, &mu1, &rho)?.potentials.psi;
            let grid: Vec<f64> = (0..c.s_points)
                .map(|k| k as f64 / (c.s_points - 1) as f64)
                .collect();
            let input = GProbeInput {
                rho: &rho,
                mu0: &mu0,
                mu1: &mu1,
                psi0: &psi0,
                psi1: &psi1,
            };
            g_probe(&space, &input, &grid, c.seed)?
        }
        ExperimentKind::PotentialStability => {
            let pairs = random_pairs(&space, c.pairs, c.seed)?;
            potential_stability_probe(&space, &measure(&c.rho)?, &pairs, c.seed, &budget)?
        }
        ExperimentKind::MapStability => {
            let pairs = random_pairs(&space, c.pairs, c.seed)?;
            map_stability_probe(&space, &measure(&c.rho)?, &pairs, c.seed, &budget)?
        }
        ExperimentKind::BarycenterStability => {
            let law = c.law.build(&space, &c.good)?;
            let cfg = StabilityConfig {
                family: c.law_perturbation,
                scales: c.scales.clone(),
                sigma: c.sigma,
            };
            barycenter_stability_scan(&space, &law, &cfg, c.seed, &budget)?
        }
        ExperimentKind::EmpiricalRate => {
            let law = c.law.build(&space, &c.good)?;
            let cfg = EmpiricalConfig {
                n_list: c.n_list.clone(),
                trials: c.trials,
                monotone_max_n: 256,
            };
            empirical_rate_experiment(&space, &law, &cfg, c.sigma, c.seed, &budget)?
        }
        ExperimentKind::WassersteinNet => {
            let cfg = NetConfig {
                cap: c.net_cap,
                probes: c.probes,
                seed: c.seed,
            };
            let nets = c
                .epsilons
                .iter()
                .map(|&e| wasserstein_net(&space, e, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let report = net_report(&space, &nets, &cfg)?;
            return Ok(RunOutput { report, nets });
        }
        ExperimentKind::KappaScan => {
            let rho = measure(&c.rho)?;
            let psi0 = solve_w2(&space, &measure(&c.mu0)?, &rho)?.potentials.psi;
            let psi1 = solve_w2(&space, &measure(&c.mu1)?, &rho)?.potentials.psi;
            kappa_scan(
                &space,
                &rho,
                &psi0,
                &psi1,
                &c.times,
                0.5,
                &c.heat,
                opts.cache_dir.as_deref(),
                c.seed,
            )?
        }
    };
    Ok(RunOutput {
        report,
        nets: Vec::new(),
    })
}

/// One row per `ε`: cardinality, construction parameters and the largest
/// probe distance; fits the entropy constant.
pub(crate) fn net_report(
    space: &DiscreteSpace,
    nets: &[NetResult],
    cfg: &NetConfig,
) -> Result<ScanReport> {
    let config = serde_json::json!({ "net": cfg, "epsilons": nets.iter().map(|r| r.epsilon).collect::<Vec<_>>() });
    let mut report = ScanReport::new(
        "wasserstein_net",
        space.label(),
        cfg.seed,
        config,
        &[
            "epsilon",
            "cardinality",
            "log_cardinality",
            "m",
            "lattice",
            "max_probe_distance",
        ],
    );
    report.rows = nets
        .iter()
        .map(|r| ScanRow {
            label: "net".into(),
            scale: r.epsilon,
            job_seed: cfg.seed,
            values: vec![
                r.epsilon,
                r.cardinality as f64,
                (r.cardinality as f64).ln(),
                r.m as f64,
                r.lattice as f64,
                r.max_probe_distance,
            ],
        })
        .collect();
    report
        .flags
        .insert("verified".into(), nets.iter().all(|r| r.verified));
    let c = fit_entropy_constant(nets, space.dim_n());
    report
        .flags
        .insert("entropy_constant".into(), c.is_some_and(f64::is_finite));
    if let Some(c) = c {
        report.constants.insert("C_ent".into(), c);
    }
    Ok(report)
}

/// Heat kernel at time `t`, read from or written to `cache_dir` when
/// given. The file name hashes the space, the time and the graph settings.
pub fn cached_heat_kernel(
    space: &DiscreteSpace,
    t: f64,
    config: &HeatConfig,
    cache_dir: Option<&Path>,
) -> Result<HeatKernel> {
    let Some(dir) = cache_dir else {
        return heat_kernel(space, t, config);
    };
    let key = serde_json::json!({
        "space": Sha256::digest(space.to_json()?.as_bytes()).to_vec(),
        "t": t,
        "heat": config,
    });
    let path = dir.join(format!("heat-{}.json", &config_hash(&key)[..16]));
    if let Ok(text) = std::fs::read_to_string(&path) {
        let mut k = HeatKernel::from_json(&text, space)?;
        k.config = *config;
        return Ok(k);
    }
    let k = heat_kernel(space, t, config)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, k.to_json()?)?;
    Ok(k)
}

/// `κ̂` of the concentration inequality at `s` for each time in `times`.
#[allow(clippy::too_many_arguments)]
pub fn kappa_scan(
    space: &DiscreteSpace,
    rho: &Measure,
    psi0: &[f64],
    psi1: &[f64],
    times: &[f64],
    s: f64,
    heat: &HeatConfig,
    cache_dir: Option<&Path>,
    seed: u64,
) -> Result<ScanReport> {
    let rows: Vec<ScanRow> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let kernel = cached_heat_kernel(space, 0.5 * t, heat, cache_dir)?;
            let c = concentration_ratio(rho, &kernel, psi0, psi1, s, t)?;
            Ok(ScanRow {
                label: "t".into(),
                scale: t,
                job_seed: job_seed(seed, i as u64),
                values: vec![t, c.lhs, c.rhs_core, c.kappa_hat.unwrap_or(f64::NAN)],
            })
        })
        .collect::<Result<_>>()?;
    let config = serde_json::json!({ "rho": rho, "times": times, "s": s, "heat": heat });
    let mut report = ScanReport::new(
        "kappa_scan",
        space.label(),
        seed,
        config,
        &["t", "lhs", "rhs_core", "kappa_hat"],
    );
    report.rows = rows;
    let tight = report
        .rows
        .iter()
        .all(|r| r.values[3].is_nan() || r.values[1] <= r.values[3] * r.values[2] * (1.0 + 1e-12));
    report.flags.insert("tight".into(), tight);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        for kind in ExperimentKind::ALL {
            let d = ExperimentConfig::default_for(kind);
            let text = d.to_toml().unwrap();
            assert_eq!(
                ExperimentConfig::from_toml_str(&text).unwrap(),
                d,
                "{}",
                kind.name()
            );
        }
    }

    #[test]
    fn partial_config_merges_over_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "experiment = \"wasserstein_net\"\nseed = 9\n[space]\nresolution = 12\n",
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.space.resolution, 12);
        assert_eq!(c.space.model, ModelSpec::Circle { circumference: 1.0 });
        let c = ExperimentConfig::from_toml_str(
            "experiment = \"deficit_scan\"\n[space]\nkind = \"circle\"\ncircumference = 2.0\nresolution = 10\n",
        )
        .unwrap();
        assert_eq!(c.space.model, ModelSpec::Circle { circumference: 2.0 });
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("seed = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml_str(
            "experiment = \"g_probe\"\n[tolerances]\nbalance = 0.0\n"
        )
        .is_err());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a":1,"b":[1,2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b":[1,2],"a":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
