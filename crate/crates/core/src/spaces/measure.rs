//! Probability measures, density-bounded ("good") measure families and
//! finite second-order laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DiscreteSpace;
use crate::error::{Error, Result};

/// A probability vector over the points of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Measure {
    weights: Vec<f64>,
    support: Vec<usize>,
}

impl TryFrom<Vec<f64>> for Measure {
    type Error = Error;
    fn try_from(raw: Vec<f64>) -> Result<Self> {
        Measure::normalized(raw)
    }
}

impl From<Measure> for Vec<f64> {
    fn from(m: Measure) -> Self {
        m.weights
    }
}

impl Measure {
    /// Normalizes a nonnegative vector with at least one positive entry.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(i) = raw.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "weight {i} is negative or not finite: {}",
                raw[i]
            )));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        let weights: Vec<f64> = if total == 1.0 {
            raw
        } else {
            raw.into_iter().map(|w| w / total).collect()
        };
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { weights, support })
    }

    pub fn dirac(point_count: usize, at: usize) -> Self {
        let mut w = vec![0.0; point_count];
        w[at] = 1.0;
        Self {
            weights: w,
            support: vec![at],
        }
    }

    /// The normalized reference measure of `space`.
    pub fn uniform(space: &DiscreteSpace) -> Self {
        Self::normalized(space.ref_measure().to_vec()).expect("reference measure is positive")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `Σ_x w(x) f(x)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.support.iter().map(|&i| self.weights[i] * f[i]).sum()
    }

    /// Density against the reference measure of `space`.
    pub fn density(&self, space: &DiscreteSpace) -> Vec<f64> {
        self.weights
            .iter()
            .zip(space.ref_measure())
            .map(|(w, m)| w / m)
            .collect()
    }

    /// Convex combination `(1 - a) self + a other`.
    pub fn mix(&self, other: &Measure, a: f64) -> Result<Measure> {
        check_same_len(self, other)?;
        Measure::normalized(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(x, y)| ((1.0 - a) * x + a * y).max(0.0))
                .collect(),
        )
    }

    pub fn check_on(&self, space: &DiscreteSpace) -> Result<()> {
        if self.len() != space.point_count() {
            return Err(Error::SpaceMismatch(self.len(), space.point_count()));
        }
        Ok(())
    }

    /// Serializes as `{space_label, weights}`.
    pub fn to_file_json(&self, space_label: &str) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MeasureFile {
            space_label: space_label.to_string(),
            weights: self.weights.clone(),
        })?)
    }

    /// Reads a `{space_label, weights}` file and checks it against `space`.
    pub fn from_file_json(s: &str, space: &DiscreteSpace) -> Result<Measure> {
        let file: MeasureFile = serde_json::from_str(s)?;
        if file.space_label != space.label() {
            return Err(Error::InvalidParameter(format!(
                "measure belongs to space '{}', not '{}'",
                file.space_label,
                space.label()
            )));
        }
        make_measure(space, &file.weights)
    }
}

pub(crate) fn check_same_len(a: &Measure, b: &Measure) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SpaceMismatch(a.len(), b.len()));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureFile {
    space_label: String,
    weights: Vec<f64>,
}

/// Normalizes `raw_weights` into a probability measure on `space`.
pub fn make_measure(space: &DiscreteSpace, raw_weights: &[f64]) -> Result<Measure> {
    if raw_weights.len() != space.point_count() {
        return Err(Error::LengthMismatch {
            expected: space.point_count(),
            got: raw_weights.len(),
        });
    }
    Measure::normalized(raw_weights.to_vec())
}

/// Density bounds `m_lower <= dρ/dvol <= m_upper` on a domain, plus
/// descriptive metadata that no algorithm checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodMeasureParams {
    pub m_lower: f64,
    pub m_upper: f64,
    /// John-domain constant, recorded only.
    #[serde(default = "one")]
    pub john_eta: f64,
    /// Perimeter bound of the domain, recorded only.
    #[serde(default = "one")]
    pub perimeter_bound: f64,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

impl GoodMeasureParams {
    pub fn new(m_lower: f64, m_upper: f64) -> Result<Self> {
        let p = Self {
            m_lower,
            m_upper,
            john_eta: 1.0,
            perimeter_bound: 1.0,
            alpha: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.m_lower) && pos(self.m_upper) && self.m_lower <= self.m_upper) {
            return Err(Error::InvalidParameter(format!(
                "density bounds need 0 < m_lower <= m_upper, got {} and {}",
                self.m_lower, self.m_upper
            )));
        }
        if !(pos(self.john_eta) && pos(self.perimeter_bound)) {
            return Err(Error::InvalidParameter(
                "john_eta and perimeter_bound must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.m_upper / self.m_lower
    }

    pub fn relaxed(&self, factor: f64) -> Self {
        Self {
            m_lower: self.m_lower / factor,
            m_upper: self.m_upper * factor,
            ..*self
        }
    }
}

/// Draws a random measure on `domain` whose density is a smoothed random
/// field squeezed into the bounds of `params`.
///
/// When `m_lower * vol(domain) <= 1 <= m_upper * vol(domain)` the density
/// lies in `[m_lower, m_upper]` pointwise; otherwise no probability density
/// can, and only the ratio `max/min <= m_upper/m_lower` is enforced.
pub fn sample_good_measure(
    space: &DiscreteSpace,
    params: &GoodMeasureParams,
    domain: &[usize],
    rng_seed: u64,
) -> Result<Measure> {
    params.validate()?;
    let mut dom = domain.to_vec();
    dom.sort_unstable();
    dom.dedup();
    if dom.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if let Some(&bad) = dom.iter().find(|&&i| i >= space.point_count()) {
        return Err(Error::InvalidParameter(format!(
            "domain index {bad} out of range"
        )));
    }
    let vol: Vec<f64> = dom.iter().map(|&i| space.ref_measure()[i]).collect();
    let total_vol: f64 = vol.iter().sum();
    let (m, big_m) = (params.m_lower, params.m_upper);

    let field = smooth_field(space, &dom, rng_seed);
    let density: Vec<f64> = if big_m - m <= 0.0 {
        vec![1.0 / total_vol; dom.len()]
    } else if m * total_vol <= 1.0 && 1.0 <= big_m * total_vol {
        let up: f64 = field.iter().zip(&vol).map(|(f, v)| f * v).sum();
        let down: f64 = field.iter().zip(&vol).map(|(f, v)| (1.0 - f) * v).sum();
        let theta_up = (1.0 - m * total_vol) / ((big_m - m) * up);
        if up > 0.0 && theta_up <= 1.0 {
            field
                .iter()
                .map(|f| m + theta_up * f * (big_m - m))
                .collect()
        } else {
            let theta = (big_m * total_vol - 1.0) / ((big_m - m) * down);
            field
                .iter()
                .map(|f| big_m - theta.min(1.0) * (1.0 - f) * (big_m - m))
                .collect()
        }
    } else {
        let r = params.ratio();
        field.iter().map(|f| 1.0 + (r - 1.0) * f).collect()
    };

    let mut raw = vec![0.0; space.point_count()];
    for ((&i, d), v) in dom.iter().zip(&density).zip(&vol) {
        raw[i] = d * v;
    }
    Measure::normalized(raw)
}

/// White noise on the domain, smoothed with a Gaussian of bandwidth
/// `0.1 * diameter` and min-max rescaled to `[0, 1]`.
fn smooth_field(space: &DiscreteSpace, dom: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = dom.iter().map(|_| rng.random::<f64>()).collect();
    let h = (0.1 * space.diameter()).max(f64::MIN_POSITIVE);
    let smoothed: Vec<f64> = dom
        .iter()
        .map(|&i| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&j, z) in dom.iter().zip(&noise) {
                let d = space.dist(i, j) / h;
                let k = (-0.5 * d * d).exp() * space.ref_measure()[j];
                num += k * z;
                den += k;
            }
            num / den
        })
        .collect();
    let lo = smoothed.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-15 {
        vec![0.5; dom.len()]
    } else {
        smoothed
            .iter()
            .map(|s| ((s - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityCheck {
    pub ok: bool,
    pub support_in_domain: bool,
    pub min_density: f64,
    pub max_density: f64,
    /// `max_density / min_density` over the support.
    pub worst_ratio: f64,
}

/// Checks `supp μ ⊆ domain` and `m_lower <= dμ/dvol <= m_upper` on the
/// support.
pub fn check_density_bounds(
    space: &DiscreteSpace,
    measure: &Measure,
    params: &GoodMeasureParams,
    domain: &[usize],
) -> DensityCheck {
    let mut in_domain = vec![false; space.point_count()];
    for &i in domain {
        if i < in_domain.len() {
            in_domain[i] = true;
        }
    }
    let support_in_domain =
        measure.len() == space.point_count() && measure.support().iter().all(|&i| in_domain[i]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    if measure.len() == space.point_count() {
        for &i in measure.support() {
            let d = measure.weight(i) / space.ref_measure()[i];
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    let ok = support_in_domain && lo >= params.m_lower && hi <= params.m_upper;
    DensityCheck {
        ok,
        support_in_domain,
        min_density: lo,
        max_density: hi,
        worst_ratio: hi / lo,
    }
}

/// One atom of a second-order law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawAtom {
    pub measure: Measure,
    pub weight: f64,
    /// Present when the atom is known to satisfy these density bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub good: Option<GoodMeasureParams>,
}

/// A finitely supported probability law over measures on one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderLaw {
    atoms: Vec<LawAtom>,
}

impl SecondOrderLaw {
    /// Builds a law from `(measure, weight)` pairs; weights are normalized.
    pub fn new(atoms: Vec<(Measure, f64)>) -> Result<Self> {
        Self::from_atoms(
            atoms
                .into_iter()
                .map(|(measure, weight)| LawAtom {
                    measure,
                    weight,
                    good: None,
                })
                .collect(),
        )
    }

    pub fn from_atoms(mut atoms: Vec<LawAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyLaw);
        }
        let n = atoms[0].measure.len();
        for a in &atoms {
            if a.measure.len() != n {
                return Err(Error::SpaceMismatch(n, a.measure.len()));
            }
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(Error::InvalidWeights(format!("law weight {}", a.weight)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights("all law weights are zero".into()));
        }
        if total != 1.0 {
            for a in &mut atoms {
                a.weight /= total;
            }
        }
        Ok(Self { atoms })
    }

    /// The Dirac law at one measure.
    pub fn single(measure: Measure) -> Self {
        Self {
            atoms: vec![LawAtom {
                measure,
                weight: 1.0,
                good: None,
            }],
        }
    }

    pub fn with_good(mut self, params: GoodMeasureParams) -> Self {
        for a in &mut self.atoms {
            a.good = Some(params);
        }
        self
    }

    pub fn atoms(&self) -> &[LawAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.atoms[0].measure.len()
    }

    pub fn measures(&self) -> impl Iterator<Item = &Measure> {
        self.atoms.iter().map(|a| &a.measure)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn check_on(&self, space: &DiscreteSpace) -> Result<()> {
        if self.point_count() != space.point_count() {
            return Err(Error::SpaceMismatch(
                self.point_count(),
                space.point_count(),
            ));
        }
        Ok(())
    }

    /// The same law with zero-weight atoms dropped and identical measures
    /// merged (first occurrence order kept).
    pub fn merged(&self) -> Self {
        let mut out: Vec<LawAtom> = Vec::new();
        for a in self.atoms.iter().filter(|a| a.weight > 0.0) {
            match out.iter_mut().find(|b| b.measure == a.measure) {
                Some(b) => b.weight += a.weight,
                None => out.push(a.clone()),
            }
        }
        Self { atoms: out }
    }

    /// Draws an atom index according to the law weights.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            acc += a.weight;
            if u < acc {
                return i;
            }
        }
        self.atoms.len() - 1
    }

    /// The empirical law of the given atom draws (indices into `self`).
    pub fn empirical(&self, draws: &[usize]) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptyLaw);
        }
        let mut counts = vec![0usize; self.atoms.len()];
        for &d in draws {
            counts[d] += 1;
        }
        Self::from_atoms(
            self.atoms
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(a, &c)| LawAtom {
                    weight: c as f64 / draws.len() as f64,
                    ..a.clone()
                })
                .collect(),
        )
    }
}
