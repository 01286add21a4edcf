//! Experiment drivers: deficit scans, interpolation and stability probes,
//! barycenter stability scans, covering nets of the space of measures and
//! empirical-barycenter rate experiments.
//!
//! Every driver returns a [`ScanReport`]. Independent jobs run on the
//! ambient rayon pool and draw randomness from [`job_rng`], which depends
//! only on the master seed and the job index, so the rows do not depend on
//! the number of worker threads.

mod config;
mod deficit_scan;
mod empirical;
mod fit;
mod nets;
mod perturb;
mod probes;
mod stability;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use config::{
    cached_heat_kernel, config_hash, kappa_scan, run_experiment, AtomSpec, ExperimentConfig,
    ExperimentKind, LawSpec, MeasureSpec, OutputSpec, RunOptions, RunOutput, SpaceSpec, Tolerances,
};
pub use deficit_scan::{deficit_scan, DeficitScanConfig};
pub use empirical::{empirical_rate_experiment, EmpiricalConfig};
pub use fit::{loglog_fit, Fit};
pub use nets::{
    farthest_point_net, fit_entropy_constant, simplex_net, simplex_net_size, wasserstein_net,
    NetConfig, NetResult,
};
pub use perturb::{perturb_law, perturb_measure, LawPerturbation, Perturbation};
pub use probes::{
    g_probe, gradient, map_stability_probe, potential_stability_probe, potential_stability_row,
    random_pairs, GProbeInput,
};
pub use stability::{barycenter_stability_scan, StabilityConfig};

/// Quantities below this are treated as solver noise in log fits.
pub const NOISE_FLOOR: f64 = 1e-6;

/// One measurement. `label`, `scale` and `job_seed` together with the
/// report's config identify exactly what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub label: String,
    pub scale: f64,
    pub job_seed: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub experiment: String,
    pub space_label: String,
    pub seed: u64,
    /// The full configuration of the run.
    pub config: serde_json::Value,
    /// Names of the entries of [`ScanRow::values`].
    pub columns: Vec<String>,
    pub rows: Vec<ScanRow>,
    pub fits: BTreeMap<String, Fit>,
    pub constants: BTreeMap<String, f64>,
    /// Outcome of each assertion made by the driver.
    pub flags: BTreeMap<String, bool>,
    /// Set when a runtime cap stopped the run early.
    pub partial: bool,
}

impl ScanReport {
    pub fn new(
        experiment: &str,
        space_label: &str,
        seed: u64,
        config: serde_json::Value,
        columns: &[&str],
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            space_label: space_label.to_string(),
            seed,
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fits: BTreeMap::new(),
            constants: BTreeMap::new(),
            flags: BTreeMap::new(),
            partial: false,
        }
    }

    /// Values of one column across rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// True when every flag is set.
    pub fn passed(&self) -> bool {
        self.flags.values().all(|&f| f)
    }

    /// CSV with header `label,scale,job_seed,<columns>,config_hash,seed`.
    pub fn to_csv(&self) -> Result<String> {
        let hash = config_hash(&self.config);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string(), "scale".into(), "job_seed".into()];
        header.extend(self.columns.iter().cloned());
        header.extend(["config_hash".to_string(), "seed".into()]);
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.rows {
            let mut rec = vec![
                row.label.clone(),
                fmt_f64(row.scale),
                row.job_seed.to_string(),
            ];
            rec.extend(row.values.iter().map(|&v| fmt_f64(v)));
            rec.extend([hash.clone(), self.seed.to_string()]);
            w.write_record(&rec).map_err(csv_error)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// JSON sidecar: everything except the rows, plus the config hash.
    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            experiment: &'a str,
            space_label: &'a str,
            seed: u64,
            config_hash: String,
            config: &'a serde_json::Value,
            columns: &'a [String],
            row_count: usize,
            fits: &'a BTreeMap<String, Fit>,
            constants: &'a BTreeMap<String, f64>,
            flags: &'a BTreeMap<String, bool>,
            partial: bool,
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            experiment: &self.experiment,
            space_label: &self.space_label,
            seed: self.seed,
            config_hash: config_hash(&self.config),
            config: &self.config,
            columns: &self.columns,
            row_count: self.rows.len(),
            fits: &self.fits,
            constants: &self.constants,
            flags: &self.flags,
            partial: self.partial,
        })?)
    }
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Config(format!("csv: {e}"))
}

/// Shortest representation that round-trips.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Deterministic generator for job `index` of a run seeded with `master`.
pub fn job_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// A draw from the flat Dirichlet distribution on `n` points (uniform on
/// the simplex), as normalized unit exponentials.
pub fn flat_dirichlet<R: rand::Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<crate::spaces::Measure> {
    use rand_distr::{Distribution, Exp1};
    crate::spaces::Measure::normalized((0..n).map(|_| Exp1.sample(&mut *rng)).collect())
}

/// Seed recorded with a row: mixes the master seed and the job index.
pub fn job_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Wall-clock budget shared by the jobs of one run.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    start: Instant,
    cap: Option<Duration>,
}

impl Budget {
    pub fn new(cap: Option<Duration>) -> Self {
        Self {
            start: Instant::now(),
            cap,
        }
    }

    pub fn unlimited() -> Self {
        Self::new(None)
    }

    pub fn exhausted(&self) -> bool {
        self.cap.is_some_and(|c| self.start.elapsed() > c)
    }
}
