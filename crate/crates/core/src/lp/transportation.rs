//! Network simplex for `min Σ c_ij f_ij` subject to row sums `a`, column
//! sums `b`, `f >= 0`.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + n - 1` cells (degenerate zero cells allowed). Pricing is Dantzig's
//! most-negative rule; after a long run of degenerate pivots the solver
//! switches to Bland's rule, which cannot cycle. Flows are recomputed from
//! the final tree so they carry no accumulated pivot roundoff.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Basic cells `(row, col, flow)`; zero flows are degenerate basics.
    pub cells: Vec<(usize, usize, f64)>,
    /// Row duals.
    pub u: Vec<f64>,
    /// Column duals; `u_i + v_j = c_ij` on basic cells.
    pub v: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

struct Tree {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// Adjacent cell indices per node (rows `0..m`, columns `m..m+n`).
    adj: Vec<Vec<usize>>,
}

impl Tree {
    fn other(&self, cell: usize, node: usize) -> usize {
        let (i, j) = self.cells[cell];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    fn remove_cell(&mut self, k: usize) {
        let (i, j) = self.cells[k];
        self.adj[i].retain(|&c| c != k);
        self.adj[self.m + j].retain(|&c| c != k);
    }

    fn add_cell(&mut self, k: usize, i: usize, j: usize, f: f64) {
        self.cells[k] = (i, j);
        self.flow[k] = f;
        self.adj[i].push(k);
        self.adj[self.m + j].push(k);
    }

    fn potentials(&self, cost: &[f64], u: &mut [f64], v: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &k in &self.adj[node] {
                let (i, j) = self.cells[k];
                let c = cost[i * n + j];
                let next = self.other(k, node);
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                if node < m {
                    v[j] = c - u[i];
                } else {
                    u[i] = c - v[j];
                }
                queue.push_back(next);
            }
        }
    }

    /// Cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let target = self.m + j;
        let mut via = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let mut queue = VecDeque::from([i]);
        seen[i] = true;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &k in &self.adj[node] {
                let next = self.other(k, node);
                if !seen[next] {
                    seen[next] = true;
                    via[next] = k;
                    queue.push_back(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = target;
        while node != i {
            let k = via[node];
            out.push(k);
            node = self.other(k, node);
        }
        out.reverse();
        out
    }

    /// Flows determined by the tree and the marginals, by leaf elimination.
    fn exact_flows(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let (m, total) = (self.m, self.m + self.n);
        let mut rem: Vec<f64> = a.iter().chain(b).cloned().collect();
        let mut degree: Vec<usize> = self.adj.iter().map(Vec::len).collect();
        let mut used = vec![false; self.cells.len()];
        let mut flow = vec![0.0; self.cells.len()];
        let mut leaves: Vec<usize> = (0..total).filter(|&v| degree[v] == 1).collect();
        while let Some(leaf) = leaves.pop() {
            if degree[leaf] != 1 {
                continue;
            }
            let Some(&k) = self.adj[leaf].iter().find(|&&k| !used[k]) else {
                continue;
            };
            used[k] = true;
            let other = self.other(k, leaf);
            let f = rem[leaf].max(0.0);
            flow[k] = f;
            rem[leaf] = 0.0;
            rem[other] -= f;
            degree[leaf] -= 1;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        debug_assert!(used.iter().all(|&u| u), "tree has {} nodes", m + self.n);
        flow
    }
}

/// Solves the balanced transportation problem exactly. `cost` is row-major
/// `a.len() x b.len()`. Both marginals must be strictly positive with
/// (numerically) equal totals.
pub fn solve_transportation(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::Solver("empty marginal".into()));
    }
    if cost.len() != m * n {
        return Err(Error::LengthMismatch {
            expected: m * n,
            got: cost.len(),
        });
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > 1e-9 * sa.max(sb) {
        return Err(Error::Solver(format!("unbalanced marginals: {sa} vs {sb}")));
    }
    let b: Vec<f64> = b.iter().map(|x| x * sa / sb).collect();

    // north-west corner start: a staircase tree of exactly m + n - 1 cells
    let mut tree = Tree {
        m,
        n,
        cells: Vec::with_capacity(m + n - 1),
        flow: Vec::with_capacity(m + n - 1),
        adj: vec![Vec::new(); m + n],
    };
    {
        let (mut ra, mut rb) = (a.to_vec(), b.clone());
        let (mut i, mut j) = (0, 0);
        loop {
            let f = ra[i].min(rb[j]);
            ra[i] -= f;
            rb[j] -= f;
            let k = tree.cells.len();
            tree.cells.push((i, j));
            tree.flow.push(f);
            tree.adj[i].push(k);
            tree.adj[m + j].push(k);
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let scale = cost.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(1.0);
    let tol = 1e-12 * scale;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let max_iter = 200 * (m + n) * (m + n) + 1000;
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let mut iterations = 0usize;

    loop {
        tree.potentials(cost, &mut u, &mut v);
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            let row = &cost[i * n..(i + 1) * n];
            for j in 0..n {
                let rc = row[j] - u[i] - v[j];
                if rc < best {
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = rc;
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::Solver(format!(
                "network simplex exceeded {max_iter} pivots"
            )));
        }

        let path = tree.path(ei, ej);
        // along the path from row ei the cells alternate -, +, -, ...
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for &k in path.iter().step_by(2) {
            let f = tree.flow[k];
            let (ci, cj) = tree.cells[k];
            let key = ci * n + cj;
            let better = f < theta
                || (f == theta && {
                    let (li, lj) = tree.cells[leave];
                    key < li * n + lj
                });
            if better {
                theta = f;
                leave = k;
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                tree.flow[k] -= theta;
            } else {
                tree.flow[k] += theta;
            }
        }
        tree.remove_cell(leave);
        tree.add_cell(leave, ei, ej, theta);

        if theta <= 0.0 {
            degenerate_run += 1;
            if degenerate_run > m + n {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
    }

    let flow = tree.exact_flows(a, &b);
    let cells: Vec<(usize, usize, f64)> = tree
        .cells
        .iter()
        .zip(&flow)
        .map(|(&(i, j), &f)| (i, j, f))
        .collect();
    let total = cells.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum();
    Ok(TransportSolution {
        cells,
        u,
        v,
        cost: total,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let s = solve_transportation(&[0.5, 0.5], &[1.0], &[0.0, 0.5]).unwrap();
        assert!((s.cost - 0.25).abs() < 1e-15);
    }

    #[test]
    fn anti_diagonal_optimum() {
        // NW corner starts on the diagonal, the optimum is the anti-diagonal
        let cost = [5.0, 1.0, 1.0, 5.0];
        let s = solve_transportation(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((s.cost - 1.0).abs() < 1e-15);
        for &(i, j, f) in &s.cells {
            assert!(s.u[i] + s.v[j] - cost[i * 2 + j] == 0.0);
            if i == j {
                assert_eq!(f, 0.0);
            }
        }
    }

    #[test]
    fn degenerate_equal_marginals() {
        // identical marginals produce many simultaneous exhaustions
        let n = 12;
        let a = vec![1.0 / n as f64; n];
        let cost: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let d = (i as f64 - ((j + 5) % n) as f64).abs();
                d * d
            })
            .collect();
        let s = solve_transportation(&a, &a, &cost).unwrap();
        assert_eq!(s.cells.len(), 2 * n - 1);
        let mut row = vec![0.0; n];
        let mut col = vec![0.0; n];
        for &(i, j, f) in &s.cells {
            assert!(f >= 0.0);
            row[i] += f;
            col[j] += f;
        }
        for k in 0..n {
            assert!((row[k] - a[k]).abs() < 1e-15);
            assert!((col[k] - a[k]).abs() < 1e-15);
        }
        for i in 0..n {
            for j in 0..n {
                assert!(cost[i * n + j] - s.u[i] - s.v[j] >= -1e-12);
            }
        }
    }
}
