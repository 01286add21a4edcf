//! Model-space constructors and the plain-text mesh format.
//!
//! Mesh files are line oriented; `#` starts a comment:
//!
//! ```text
//! label  my-mesh        # optional
//! dim    2              # optional, default 2
//! curv   0.0            # optional, default 0
//! v <weight> [x y z]    # one line per vertex, indexed from 0 in order
//! e <i> <j> <length>    # undirected edge
//! ```

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DiscreteSpace, Layout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Interval {
        length: f64,
    },
    Circle {
        circumference: f64,
    },
    Sphere {
        radius: f64,
    },
    /// Flat cone of total angle `angle` in `(0, 2π)` cut at slant `radius`.
    Cone {
        angle: f64,
        radius: f64,
    },
    MeshFile {
        path: String,
    },
}

/// Builds a validated model space with roughly `resolution` points
/// (exactly `resolution` for every analytic kind).
pub fn build_model_space(spec: &ModelSpec, resolution: usize) -> Result<DiscreteSpace> {
    if resolution < 2 && !matches!(spec, ModelSpec::MeshFile { .. }) {
        return Err(Error::InvalidResolution(resolution));
    }
    match *spec {
        ModelSpec::Interval { length } => {
            positive("length", length)?;
            interval(resolution, length)
        }
        ModelSpec::Circle { circumference } => {
            positive("circumference", circumference)?;
            circle(resolution, circumference)
        }
        ModelSpec::Sphere { radius } => {
            positive("radius", radius)?;
            sphere(resolution, radius)
        }
        ModelSpec::Cone { angle, radius } => {
            if !(angle > 0.0 && angle < 2.0 * PI) {
                return Err(Error::ConeAngle(angle));
            }
            positive("radius", radius)?;
            cone(resolution, angle, radius)
        }
        ModelSpec::MeshFile { ref path } => {
            let text = std::fs::read_to_string(path)?;
            parse_mesh(&text)
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn interval(n: usize, length: f64) -> Result<DiscreteSpace> {
    let spacing = length / (n - 1) as f64;
    // scale before dividing so that the endpoints sit exactly `length` apart
    let at = |k: usize| k as f64 * length / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(at).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = at(i.abs_diff(j));
        }
    }
    DiscreteSpace::new(
        format!("interval-{n}"),
        1,
        0.0,
        dist,
        vec![length / n as f64; n],
        Some(xs.into_iter().map(|x| vec![x]).collect()),
        Layout::Interval { spacing },
    )
}

fn circle(n: usize, circumference: f64) -> Result<DiscreteSpace> {
    let spacing = circumference / n as f64;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i.abs_diff(j);
            dist[i * n + j] = k.min(n - k) as f64 * circumference / n as f64;
        }
    }
    let radius = circumference / (2.0 * PI);
    let pts = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            vec![radius * a.cos(), radius * a.sin()]
        })
        .collect();
    DiscreteSpace::new(
        format!("circle-{n}"),
        1,
        0.0,
        dist,
        vec![spacing; n],
        Some(pts),
        Layout::Circle { spacing },
    )
}

/// Fibonacci lattice on the round sphere.
fn sphere(n: usize, radius: f64) -> Result<DiscreteSpace> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            [r * th.cos(), r * th.sin(), z]
        })
        .collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = (0..3).map(|k| pts[i][k] * pts[j][k]).sum();
            let d = radius * dot.clamp(-1.0, 1.0).acos();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    DiscreteSpace::new(
        format!("sphere-{n}"),
        2,
        1.0 / (radius * radius),
        dist,
        vec![4.0 * PI * radius * radius / n as f64; n],
        Some(
            pts.iter()
                .map(|p| p.iter().map(|c| c * radius).collect())
                .collect(),
        ),
        Layout::Sphere,
    )
}

/// Polar coordinates `(r, θ)` of the cone sample points: rings at radii
/// `(k - 1/2) R / K`, points per ring proportional to the ring radius.
pub(crate) fn cone_points(n: usize, angle: f64, radius: f64) -> Vec<(f64, f64, f64)> {
    let rings = ((2.0 * n as f64 / angle).sqrt().round() as usize).clamp(1, n);
    let h = radius / rings as f64;
    let shares: Vec<f64> = (1..=rings).map(|k| k as f64 - 0.5).collect();
    let total: f64 = shares.iter().sum();
    // largest-remainder apportionment, at least one point per ring
    let spare = n - rings;
    let exact: Vec<f64> = shares.iter().map(|s| s / total * spare as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| 1 + e.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..rings).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    let mut out = Vec::with_capacity(n);
    for (k, &count) in counts.iter().enumerate() {
        let r = (k as f64 + 0.5) * h;
        let area = 0.5 * angle * (((k + 1) as f64 * h).powi(2) - (k as f64 * h).powi(2));
        let offset = if k % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..count {
            let th = (j as f64 + offset) * angle / count as f64;
            out.push((r, th, area / count as f64));
        }
    }
    out
}

/// Geodesic distance on a flat cone of total angle `angle < 2π` between
/// points given in polar coordinates, by unrolling the sector. The angular
/// separation is at most `angle / 2 < π`, so the straight segment in the
/// unrolled sector never has to pass through the apex.
pub fn cone_distance(angle: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let delta = (a.1 - b.1).rem_euclid(angle);
    let sep = delta.min(angle - delta);
    (a.0 * a.0 + b.0 * b.0 - 2.0 * a.0 * b.0 * sep.cos())
        .max(0.0)
        .sqrt()
}

fn cone(n: usize, angle: f64, radius: f64) -> Result<DiscreteSpace> {
    let pts = cone_points(n, angle, radius);
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cone_distance(angle, (pts[i].0, pts[i].1), (pts[j].0, pts[j].1));
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    DiscreteSpace::new(
        format!("cone-{n}"),
        2,
        0.0,
        dist,
        pts.iter().map(|p| p.2).collect(),
        Some(pts.iter().map(|p| vec![p.0, p.1]).collect()),
        Layout::Cone,
    )
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over an undirected weighted graph given
/// as adjacency lists.
pub fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier(0.0, source));
    while let Some(Frontier(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adjacency[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Frontier(nd, v));
            }
        }
    }
    dist
}

/// Parses the plain-text mesh format and returns the space of all-pairs
/// shortest-path distances over the edge graph.
pub fn parse_mesh(text: &str) -> Result<DiscreteSpace> {
    let mut label = String::from("mesh");
    let mut dim = 2usize;
    let mut curv = 0.0f64;
    let mut weights = Vec::new();
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut edges = Vec::new();
    let bad = |line: usize, msg: &str| Error::MalformedMesh {
        line,
        msg: msg.to_string(),
    };

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tok = content.split_whitespace();
        let head = tok.next().unwrap();
        let nums = |tok: std::str::SplitWhitespace| -> Result<Vec<f64>> {
            tok.map(|t| {
                t.parse::<f64>()
                    .map_err(|_| bad(line, &format!("not a number: {t}")))
            })
            .collect()
        };
        match head {
            "label" => label = tok.collect::<Vec<_>>().join(" "),
            "dim" => {
                dim = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .filter(|&d| d > 0)
                    .ok_or_else(|| bad(line, "dim needs a positive integer"))?
            }
            "curv" => {
                curv = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(line, "curv needs a number"))?
            }
            "v" => {
                let v = nums(tok)?;
                let (&w, rest) = v
                    .split_first()
                    .ok_or_else(|| bad(line, "vertex needs a weight"))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(bad(line, "vertex weight must be positive"));
                }
                weights.push(w);
                coords.push(rest.to_vec());
            }
            "e" => {
                let v = nums(tok)?;
                if v.len() != 3 {
                    return Err(bad(line, "edge needs: i j length"));
                }
                let (i, j, len) = (v[0], v[1], v[2]);
                if i < 0.0 || j < 0.0 || i.fract() != 0.0 || j.fract() != 0.0 {
                    return Err(bad(line, "edge endpoints must be vertex indices"));
                }
                if !(len > 0.0 && len.is_finite()) {
                    return Err(bad(line, "edge length must be positive"));
                }
                edges.push((line, i as usize, j as usize, len));
            }
            other => return Err(bad(line, &format!("unknown record '{other}'"))),
        }
    }
    let n = weights.len();
    if n < 2 {
        return Err(bad(0, "mesh needs at least two vertices"));
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(line, i, j, len) in &edges {
        if i >= n || j >= n {
            return Err(bad(line, "edge references a missing vertex"));
        }
        adjacency[i].push((j, len));
        adjacency[j].push((i, len));
    }
    let mut dist = vec![0.0; n * n];
    for s in 0..n {
        let row = dijkstra(&adjacency, s);
        if let Some(t) = row.iter().position(|d| d.is_infinite()) {
            return Err(bad(0, &format!("vertex {t} unreachable from vertex {s}")));
        }
        dist[s * n..(s + 1) * n].copy_from_slice(&row);
    }
    // symmetrize away summation-order noise
    for i in 0..n {
        for j in (i + 1)..n {
            let m = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = m;
            dist[j * n + i] = m;
        }
    }
    let points = if coords.iter().all(|c| !c.is_empty()) {
        Some(coords)
    } else {
        None
    };
    DiscreteSpace::new(label, dim, curv, dist, weights, points, Layout::Mesh)
}
