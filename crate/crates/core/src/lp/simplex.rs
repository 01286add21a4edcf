//! Two-phase dense tableau simplex for `min cᵀx  s.t.  Ax = b, x >= 0`.
//!
//! Phase I runs with implicit artificial columns (one per row); rows whose
//! artificial cannot be pivoted out are linearly redundant and dropped.
//! After Phase II the optimal basis is re-solved from the original data
//! with an LU factorization and the reduced costs are re-verified, so the
//! returned primal/dual pair does not inherit tableau roundoff.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sparse-column LP in equality standard form.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Row duals (zero on rows dropped as redundant).
    pub y: Vec<f64>,
    pub objective: f64,
    /// Reduced costs `c - Aᵀy`.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(rows: usize, b: Vec<f64>) -> Self {
        assert_eq!(b.len(), rows);
        Self {
            rows,
            cols: Vec::new(),
            b,
            c: Vec::new(),
        }
    }

    /// Appends a variable with objective coefficient `cost` and column
    /// entries `(row, value)`; returns its index.
    pub fn add_var(&mut self, cost: f64, entries: Vec<(usize, f64)>) -> usize {
        debug_assert!(entries.iter().all(|&(r, _)| r < self.rows));
        self.cols.push(entries);
        self.c.push(cost);
        self.cols.len() - 1
    }

    pub fn var_count(&self) -> usize {
        self.cols.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-12;

struct Tableau<'a> {
    lp: &'a LinearProgram,
    /// Original row index of each tableau row.
    row_ids: Vec<usize>,
    t: Vec<f64>,
    rhs: Vec<f64>,
    /// Basic variable per row; `None` while the artificial is basic.
    basis: Vec<Option<usize>>,
    is_basic: Vec<bool>,
    width: usize,
    pivots: usize,
}

impl<'a> Tableau<'a> {
    fn from_lp(lp: &'a LinearProgram) -> Self {
        let width = lp.cols.len();
        let mut t = vec![0.0; lp.rows * width];
        for (j, col) in lp.cols.iter().enumerate() {
            for &(r, a) in col {
                t[r * width + j] += a;
            }
        }
        let mut rhs = lp.b.clone();
        for r in 0..lp.rows {
            if rhs[r] < 0.0 {
                rhs[r] = -rhs[r];
                for v in &mut t[r * width..(r + 1) * width] {
                    *v = -*v;
                }
            }
        }
        Self {
            lp,
            row_ids: (0..lp.rows).collect(),
            t,
            rhs,
            basis: vec![None; lp.rows],
            is_basic: vec![false; width],
            width,
            pivots: 0,
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.width..(r + 1) * self.width]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        self.rhs[pr] /= p;
        self.t[pr * w + pc] = 1.0;
        let prow: Vec<f64> = self.row(pr).to_vec();
        let prhs = self.rhs[pr];
        for r in 0..self.row_ids.len() {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[r * w..(r + 1) * w];
            for (v, &q) in row.iter_mut().zip(&prow) {
                if q != 0.0 {
                    *v -= f * q;
                }
            }
            row[pc] = 0.0;
            self.rhs[r] -= f * prhs;
            if self.rhs[r] < 0.0 && self.rhs[r] > -FEAS_TOL * (1.0 + prhs.abs()) {
                self.rhs[r] = 0.0;
            }
        }
        if let Some(old) = self.basis[pr] {
            self.is_basic[old] = false;
        }
        self.basis[pr] = Some(pc);
        self.is_basic[pc] = true;
        self.pivots += 1;
    }

    /// Reduced costs for objective `cost` over non-artificial columns; the
    /// artificial of row `r` has cost `art_cost` when basic.
    fn reduced_costs(&self, cost: &[f64], art_cost: f64) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, b) in self.basis.iter().enumerate() {
            let cb = match b {
                Some(j) => cost[*j],
                None => art_cost,
            };
            if cb == 0.0 {
                continue;
            }
            for (dj, &a) in d.iter_mut().zip(self.row(r)) {
                *dj -= cb * a;
            }
        }
        d
    }

    /// Primal simplex on `cost`, allowing only columns with `allowed[j]`.
    /// Artificials never re-enter. Returns `Err` on unboundedness or when
    /// the pivot budget is spent.
    fn optimize(&mut self, cost: &[f64], art_cost: f64, allowed: Option<&[bool]>) -> Result<()> {
        let scale = cost
            .iter()
            .fold(0.0f64, |s, c| s.max(c.abs()))
            .max(art_cost.abs())
            .max(1.0);
        let tol = 1e-11 * scale;
        let mut d = self.reduced_costs(cost, art_cost);
        let budget = 50 * (self.row_ids.len() + self.width) + 10_000;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut steps = 0usize;
        loop {
            let mut enter = None;
            let mut best = -tol;
            for (j, &dj) in d.iter().enumerate() {
                if self.is_basic[j] || allowed.is_some_and(|a| !a[j]) {
                    continue;
                }
                if dj < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            let Some(pc) = enter else { return Ok(()) };
            steps += 1;
            if steps > budget {
                return Err(Error::Solver(format!("simplex exceeded {budget} pivots")));
            }
            // ratio test; ties go to the larger pivot, or under Bland's rule
            // to the smallest basic index (artificials first)
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.row_ids.len() {
                let a = self.t[r * self.width + pc];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[r].max(0.0) / a;
                let take = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio
                            || (ratio == lratio
                                && if bland {
                                    let key =
                                        |row: usize| self.basis[row].map_or(-1, |j| j as isize);
                                    key(r) < key(lr)
                                } else {
                                    a > self.t[lr * self.width + pc]
                                })
                    }
                };
                if take {
                    leave = Some((r, ratio));
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(Error::Solver("linear program is unbounded".into()));
            };
            // update reduced costs with the pivot row before pivoting
            let f = d[pc] / self.t[pr * self.width + pc];
            {
                let row = self.row(pr).to_vec();
                for (dj, a) in d.iter_mut().zip(&row) {
                    if *a != 0.0 {
                        *dj -= f * a;
                    }
                }
            }
            self.pivot(pr, pc);
            d[pc] = 0.0;
            if ratio <= 0.0 {
                degenerate_run += 1;
                if degenerate_run > self.row_ids.len() {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            if steps.is_multiple_of(64) {
                d = self.reduced_costs(cost, art_cost);
            }
        }
    }

    fn phase_one(&mut self) -> Result<()> {
        let zeros = vec![0.0; self.width];
        self.optimize(&zeros, 1.0, None)?;
        let infeas: f64 = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(b, _)| b.is_none())
            .map(|(_, v)| *v)
            .sum();
        let scale = self
            .lp
            .b
            .iter()
            .fold(0.0f64, |s, v| s.max(v.abs()))
            .max(1.0);
        if infeas > 1e-9 * scale {
            return Err(Error::Solver(format!(
                "linear program is infeasible (phase one residual {infeas:e})"
            )));
        }
        // drive remaining artificials out, or drop their rows as redundant
        let mut r = 0;
        while r < self.row_ids.len() {
            if self.basis[r].is_some() {
                r += 1;
                continue;
            }
            let row = self.row(r);
            let mut best: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate() {
                if !self.is_basic[j] && a.abs() > PIVOT_TOL && best.is_none_or(|(_, b)| a.abs() > b)
                {
                    best = Some((j, a.abs()));
                }
            }
            match best {
                Some((j, _)) => {
                    self.rhs[r] = 0.0;
                    self.pivot(r, j);
                    r += 1;
                }
                None => self.drop_row(r),
            }
        }
        Ok(())
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width;
        self.t.drain(r * w..(r + 1) * w);
        self.rhs.remove(r);
        self.basis.remove(r);
        self.row_ids.remove(r);
    }

    fn basis_vars(&self) -> Vec<usize> {
        self.basis
            .iter()
            .map(|b| b.expect("artificial left in basis"))
            .collect()
    }

    /// Re-solves the current basis from the original data. Returns the
    /// refined primal, dual and reduced costs.
    fn refine(&self, cost: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let basis = self.basis_vars();
        let k = basis.len();
        let mut local = vec![usize::MAX; self.lp.rows];
        for (pos, &r) in self.row_ids.iter().enumerate() {
            local[r] = pos;
        }
        let mut bmat = DMatrix::<f64>::zeros(k, k);
        for (col, &j) in basis.iter().enumerate() {
            for &(r, a) in &self.lp.cols[j] {
                if local[r] != usize::MAX {
                    bmat[(local[r], col)] += a;
                }
            }
        }
        let lu = bmat.clone().lu();
        let rhs = DVector::from_iterator(k, self.row_ids.iter().map(|&r| self.lp.b[r]));
        let xb = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("singular basis".into()))?;
        let cb = DVector::from_iterator(k, basis.iter().map(|&j| cost[j]));
        let yl = bmat
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or_else(|| Error::Solver("singular basis".into()))?;
        let mut x = vec![0.0; self.width];
        for (pos, &j) in basis.iter().enumerate() {
            x[j] = xb[pos];
        }
        let mut y = vec![0.0; self.lp.rows];
        for (pos, &r) in self.row_ids.iter().enumerate() {
            y[r] = yl[pos];
        }
        let d: Vec<f64> = self
            .lp
            .cols
            .iter()
            .enumerate()
            .map(|(j, col)| cost[j] - col.iter().map(|&(r, a)| y[r] * a).sum::<f64>())
            .collect();
        Ok((x, y, d))
    }

    /// Rebuilds the tableau as `B⁻¹A` for the current basis.
    fn reinvert(&mut self) -> Result<()> {
        let basis = self.basis_vars();
        let k = basis.len();
        let mut local = vec![usize::MAX; self.lp.rows];
        for (pos, &r) in self.row_ids.iter().enumerate() {
            local[r] = pos;
        }
        let mut bmat = DMatrix::<f64>::zeros(k, k);
        let mut amat = DMatrix::<f64>::zeros(k, self.width);
        for (j, col) in self.lp.cols.iter().enumerate() {
            for &(r, a) in col {
                if local[r] != usize::MAX {
                    amat[(local[r], j)] += a;
                }
            }
        }
        for (col, &j) in basis.iter().enumerate() {
            bmat.set_column(col, &amat.column(j));
        }
        let lu = bmat.lu();
        let t = lu
            .solve(&amat)
            .ok_or_else(|| Error::Solver("singular basis".into()))?;
        let rhs = DVector::from_iterator(k, self.row_ids.iter().map(|&r| self.lp.b[r]));
        let xb = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("singular basis".into()))?;
        for r in 0..k {
            for j in 0..self.width {
                self.t[r * self.width + j] = t[(r, j)];
            }
            self.rhs[r] = xb[r].max(0.0);
        }
        Ok(())
    }
}

fn solution_ok(x: &[f64], d: &[f64], allowed: Option<&[bool]>, scale: f64) -> bool {
    let tol = 1e-10 * scale;
    x.iter().all(|&v| v >= -1e-12)
        && d.iter()
            .enumerate()
            .all(|(j, &dj)| dj >= -tol || allowed.is_some_and(|a| !a[j]))
}

fn optimize_refined(
    tab: &mut Tableau,
    cost: &[f64],
    allowed: Option<&[bool]>,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let scale = cost.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(1.0);
    for _ in 0..6 {
        tab.optimize(cost, 0.0, allowed)?;
        let (x, y, d) = tab.refine(cost)?;
        if solution_ok(&x, &d, allowed, scale) {
            return Ok((x, y, d));
        }
        tab.reinvert()?;
    }
    Err(Error::Solver("basis refinement did not settle".into()))
}

fn finish(lp: &LinearProgram, x: Vec<f64>, y: Vec<f64>, d: Vec<f64>, pivots: usize) -> LpSolution {
    let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
    let objective = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    LpSolution {
        x,
        y,
        objective,
        reduced_costs: d,
        pivots,
    }
}

/// Solves the program to optimality.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    Ok(solve_with_face_range(lp, None)?.0)
}

/// Solves the program and, given a secondary objective `r`, also returns
/// the range `[min rᵀx, max rᵀx]` over the optimal face (reached by
/// re-optimizing with all columns of positive reduced cost frozen at zero).
pub fn solve_with_face_range(
    lp: &LinearProgram,
    r: Option<&[f64]>,
) -> Result<(LpSolution, Option<(f64, f64)>)> {
    if lp.cols.is_empty() {
        return Err(Error::Solver("linear program has no variables".into()));
    }
    let mut tab = Tableau::from_lp(lp);
    tab.phase_one()?;
    let (x, y, d) = optimize_refined(&mut tab, &lp.c, None)?;
    let pivots = tab.pivots;
    let sol = finish(lp, x, y, d, pivots);
    let Some(r) = r else {
        return Ok((sol, None));
    };
    let scale = lp.c.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(1.0);
    let allowed: Vec<bool> = sol
        .reduced_costs
        .iter()
        .map(|&dj| dj <= 1e-9 * scale)
        .collect();
    let value = |x: &[f64]| x.iter().zip(r).map(|(a, b)| a * b).sum::<f64>();
    let (xmin, _, _) = optimize_refined(&mut tab, r, Some(&allowed))?;
    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
    let (xmax, _, _) = optimize_refined(&mut tab, &neg, Some(&allowed))?;
    Ok((sol, Some((value(&xmin), value(&xmax)))))
}
