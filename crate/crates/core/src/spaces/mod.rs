//! Finite metric-measure spaces standing in for compact curved domains,
//! probability measures on them, and finite second-order laws.
//!
//! A [`DiscreteSpace`] is immutable once built: distances, reference
//! measure and dimension/curvature metadata are fixed, and derived data
//! (the diameter, the quadratic cost matrix) is computed once.

mod builders;
mod measure;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::CostMatrix;

pub use builders::{build_model_space, cone_distance, dijkstra, parse_mesh, ModelSpec};
pub use measure::{
    check_density_bounds, make_measure, sample_good_measure, DensityCheck, GoodMeasureParams,
    LawAtom, Measure, SecondOrderLaw,
};

/// Tolerance used when checking the triangle inequality and symmetry.
pub const METRIC_TOL: f64 = 1e-12;

/// How the points of a space are laid out; 1-D layouts carry a discrete
/// gradient stencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// Equispaced points on a segment, endpoints included.
    Interval {
        spacing: f64,
    },
    /// Equispaced points on a closed curve.
    Circle {
        spacing: f64,
    },
    Sphere,
    Cone,
    Mesh,
    Custom,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiscreteSpace {
    label: String,
    dim_n: usize,
    curv_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<Vec<f64>>>,
    /// Row-major `point_count x point_count` geodesic distances.
    dist: Vec<f64>,
    ref_measure: Vec<f64>,
    #[serde(default = "default_layout")]
    layout: Layout,
    #[serde(skip)]
    diameter: f64,
    #[serde(skip)]
    cost: OnceLock<CostMatrix>,
}

fn default_layout() -> Layout {
    Layout::Custom
}

impl Clone for DiscreteSpace {
    fn clone(&self) -> Self {
        Self {
            label: self.label.clone(),
            dim_n: self.dim_n,
            curv_k: self.curv_k,
            points: self.points.clone(),
            dist: self.dist.clone(),
            ref_measure: self.ref_measure.clone(),
            layout: self.layout,
            diameter: self.diameter,
            cost: OnceLock::new(),
        }
    }
}

impl DiscreteSpace {
    /// Builds a space and validates it; fails if the distance matrix is not
    /// a metric or the reference measure is not strictly positive.
    pub fn new(
        label: impl Into<String>,
        dim_n: usize,
        curv_k: f64,
        dist: Vec<f64>,
        ref_measure: Vec<f64>,
        points: Option<Vec<Vec<f64>>>,
        layout: Layout,
    ) -> Result<Self> {
        let space = Self::new_unchecked(label, dim_n, curv_k, dist, ref_measure, points, layout)?;
        space.validate()?;
        Ok(space)
    }

    /// Builds a space checking only shapes, so that [`validate_metric`] can
    /// be run on arbitrary (possibly non-metric) input.
    pub fn new_unchecked(
        label: impl Into<String>,
        dim_n: usize,
        curv_k: f64,
        dist: Vec<f64>,
        ref_measure: Vec<f64>,
        points: Option<Vec<Vec<f64>>>,
        layout: Layout,
    ) -> Result<Self> {
        let n = ref_measure.len();
        if n == 0 {
            return Err(Error::InvalidResolution(0));
        }
        if dist.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: dist.len(),
            });
        }
        if let Some(p) = &points {
            if p.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
        }
        if dim_n == 0 {
            return Err(Error::InvalidParameter("dim_n must be positive".into()));
        }
        let diameter = dist.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            label: label.into(),
            dim_n,
            curv_k,
            points,
            dist,
            ref_measure,
            layout,
            diameter,
            cost: OnceLock::new(),
        })
    }

    fn validate(&self) -> Result<()> {
        let report = validate_metric(self);
        if !report.passed() {
            return Err(Error::InvalidMetric(report.summary()));
        }
        if let Some(i) = self
            .ref_measure
            .iter()
            .position(|&m| !(m > 0.0 && m.is_finite()))
        {
            return Err(Error::InvalidMetric(format!(
                "reference measure not strictly positive at point {i}"
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point_count(&self) -> usize {
        self.ref_measure.len()
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn curv_k(&self) -> f64 {
        self.curv_k
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn points(&self) -> Option<&[Vec<f64>]> {
        self.points.as_deref()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.point_count() + j]
    }

    pub fn dist_row(&self, i: usize) -> &[f64] {
        let n = self.point_count();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn dist_matrix(&self) -> &[f64] {
        &self.dist
    }

    pub fn ref_measure(&self) -> &[f64] {
        &self.ref_measure
    }

    pub fn total_volume(&self) -> f64 {
        self.ref_measure.iter().sum()
    }

    /// The quadratic cost `d^2 / 2`, computed on first use.
    pub fn cost(&self) -> &CostMatrix {
        self.cost.get_or_init(|| CostMatrix::from_space(self))
    }

    /// Diameter of the space of probability measures under `w2`: the
    /// largest distance between two Dirac masses, `diameter / sqrt(2)`.
    pub fn wasserstein_diameter(&self) -> f64 {
        (0.5 * self.diameter * self.diameter).sqrt()
    }

    /// Signed displacement `to - from` for 1-D layouts (shortest way round
    /// on a circle).
    pub fn signed_displacement(&self, from: usize, to: usize) -> Option<f64> {
        let n = self.point_count() as isize;
        match self.layout {
            Layout::Interval { spacing } => Some((to as isize - from as isize) as f64 * spacing),
            Layout::Circle { spacing } => {
                let mut k = (to as isize - from as isize).rem_euclid(n);
                if k > n / 2 {
                    k -= n;
                }
                Some(k as f64 * spacing)
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: DiscreteSpace = serde_json::from_str(s)?;
        DiscreteSpace::new(
            raw.label,
            raw.dim_n,
            raw.curv_k,
            raw.dist,
            raw.ref_measure,
            raw.points,
            raw.layout,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite,
    Negative,
    Diagonal,
    Asymmetry,
    Triangle,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending indices; for the triangle inequality `d(i,k) > d(i,j) + d(j,k)`.
    pub indices: Vec<usize>,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub nonnegative: bool,
    pub zero_diagonal: bool,
    pub symmetric: bool,
    pub triangle: bool,
    /// Largest violation of any kind, if there is one.
    pub worst: Option<Violation>,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.zero_diagonal && self.symmetric && self.triangle
    }

    pub fn summary(&self) -> String {
        match &self.worst {
            None => "pass".to_string(),
            Some(v) => format!(
                "fail: {:?} at {:?}, violation {:e}",
                v.kind, v.indices, v.amount
            ),
        }
    }
}

/// Checks symmetry, zero diagonal, nonnegativity and the triangle
/// inequality, reporting the worst violation found.
pub fn validate_metric(space: &DiscreteSpace) -> MetricReport {
    let n = space.point_count();
    let d = |i: usize, j: usize| space.dist[i * n + j];
    let tol = METRIC_TOL * space.diameter.max(1.0);
    let mut report = MetricReport {
        nonnegative: true,
        zero_diagonal: true,
        symmetric: true,
        triangle: true,
        worst: None,
    };
    let note = |report: &mut MetricReport, kind, indices: Vec<usize>, amount: f64| {
        let replace = match &report.worst {
            None => true,
            Some(w) => amount > w.amount,
        };
        if replace {
            report.worst = Some(Violation {
                kind,
                indices,
                amount,
            });
        }
    };

    for i in 0..n {
        for j in 0..n {
            let v = d(i, j);
            if !v.is_finite() {
                report.nonnegative = false;
                note(
                    &mut report,
                    ViolationKind::NonFinite,
                    vec![i, j],
                    f64::INFINITY,
                );
            } else if v < 0.0 {
                report.nonnegative = false;
                note(&mut report, ViolationKind::Negative, vec![i, j], -v);
            }
        }
        if d(i, i).abs() > 0.0 {
            report.zero_diagonal = false;
            note(&mut report, ViolationKind::Diagonal, vec![i], d(i, i).abs());
        }
        for j in (i + 1)..n {
            let gap = (d(i, j) - d(j, i)).abs();
            if gap > tol {
                report.symmetric = false;
                note(&mut report, ViolationKind::Asymmetry, vec![i, j], gap);
            }
        }
    }
    if !report.nonnegative {
        return report;
    }
    for i in 0..n {
        for j in 0..n {
            let dij = d(i, j);
            for k in 0..n {
                let excess = d(i, k) - dij - d(j, k);
                if excess > tol {
                    report.triangle = false;
                    note(&mut report, ViolationKind::Triangle, vec![i, j, k], excess);
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(n: usize, dist: Vec<f64>) -> DiscreteSpace {
        DiscreteSpace::new_unchecked("raw", 1, 0.0, dist, vec![1.0; n], None, Layout::Custom)
            .unwrap()
    }

    #[test]
    fn valid_interval_passes() {
        let s = build_model_space(&ModelSpec::Interval { length: 1.0 }, 10).unwrap();
        let r = validate_metric(&s);
        assert!(r.passed());
        assert!(r.worst.is_none());
    }

    #[test]
    fn asymmetry_is_reported() {
        let s = raw(2, vec![0.0, 1.0, 2.0, 0.0]);
        let r = validate_metric(&s);
        assert!(!r.symmetric);
        let w = r.worst.unwrap();
        assert_eq!(w.kind, ViolationKind::Asymmetry);
        assert_eq!(w.amount, 1.0);
    }

    #[test]
    fn triangle_violation_of_one() {
        // d(a,c) = 3 but d(a,b) + d(b,c) = 2
        let s = raw(
            3,
            vec![
                0.0, 1.0, 3.0, //
                1.0, 0.0, 1.0, //
                3.0, 1.0, 0.0,
            ],
        );
        let r = validate_metric(&s);
        assert!(r.symmetric && r.zero_diagonal);
        assert!(!r.triangle);
        let w = r.worst.unwrap();
        assert_eq!(w.kind, ViolationKind::Triangle);
        assert_eq!(w.amount, 1.0);
        assert!(DiscreteSpace::new(
            "bad",
            1,
            0.0,
            s.dist.clone(),
            vec![1.0; 3],
            None,
            Layout::Custom
        )
        .is_err());
    }

    #[test]
    fn rejects_nonpositive_reference_measure() {
        let e = DiscreteSpace::new(
            "m",
            1,
            0.0,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0],
            None,
            Layout::Custom,
        );
        assert!(e.is_err());
    }

    #[test]
    fn json_round_trip_keeps_distances() {
        let s = build_model_space(&ModelSpec::Circle { circumference: 1.0 }, 8).unwrap();
        let back = DiscreteSpace::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.dist_matrix(), s.dist_matrix());
        assert_eq!(back.layout(), s.layout());
        assert_eq!(back.diameter(), s.diameter());
    }

    #[test]
    fn circle_displacement_wraps() {
        let s = build_model_space(&ModelSpec::Circle { circumference: 1.0 }, 8).unwrap();
        assert_eq!(s.signed_displacement(7, 0), Some(0.125));
        assert_eq!(s.signed_displacement(0, 7), Some(-0.125));
    }
}
