//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `maximize c^T x  s.t.  A x = b, x >= 0`. Problems here have a
//! handful of rows, so the tableau is stored densely and every pivot
//! touches the whole thing.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-10;

/// A linear program in equality standard form.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Row-major constraint matrix, `m` rows of `n` entries.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Objective coefficients (maximized).
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Reduced costs; a column may enter when its cost exceeds `COST_EPS`.
    cost: Vec<f64>,
    value: f64,
    basis: Vec<usize>,
    /// Columns that may enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.rows[r][j] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i].abs() < FEAS_EPS * 1e-3 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (v, &pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[j] = 0.0;
            self.value += f * pivot_rhs;
        }
        self.basis[r] = j;
    }

    /// Run Bland-rule pivots to optimality.
    fn optimize(&mut self, max_iter: usize) -> Result<bool> {
        for _ in 0..max_iter {
            let entering =
                (0..self.cost.len()).find(|&j| self.allowed[j] && self.cost[j] > COST_EPS);
            let Some(j) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[j] > PIVOT_EPS {
                    let ratio = self.rhs[r] / row[j];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, j),
                None => return Ok(false),
            }
        }
        Err(Error::LpNumericalFailure(format!(
            "no optimum after {max_iter} pivots"
        )))
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpOutcome> {
        let m = self.b.len();
        let n = self.c.len();
        if self.a.len() != m || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::LpNumericalFailure("inconsistent dimensions".into()));
        }
        if self
            .a
            .iter()
            .flatten()
            .chain(&self.b)
            .chain(&self.c)
            .any(|v| !v.is_finite())
        {
            return Err(Error::LpNumericalFailure("non-finite coefficient".into()));
        }
        let max_iter = 50 * (m + n + 10) * (m + 1);

        // Phase 1: artificial variable per row, maximize -sum(artificials).
        let width = n + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, (arow, &bi)) in self.a.iter().zip(&self.b).enumerate() {
            let sign = if bi < 0.0 { -1.0 } else { 1.0 };
            let mut row: Vec<f64> = arow.iter().map(|v| sign * v).collect();
            row.resize(width, 0.0);
            row[n + i] = 1.0;
            rows.push(row);
            rhs.push(sign * bi);
        }
        let mut cost = vec![0.0; width];
        let mut value = 0.0;
        for (row, &r) in rows.iter().zip(&rhs) {
            for j in 0..n {
                cost[j] += row[j];
            }
            value -= r;
        }
        let mut tab = Tableau {
            rows,
            rhs,
            cost,
            value,
            basis: (n..n + m).collect(),
            allowed: (0..width).map(|j| j < n).collect(),
        };
        if !tab.optimize(max_iter)? {
            return Err(Error::LpNumericalFailure(
                "phase 1 reported unbounded".into(),
            ));
        }
        let scale = 1.0 + self.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if tab.value < -FEAS_EPS * scale {
            return Ok(LpOutcome::Infeasible);
        }

        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= n {
                match (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_EPS) {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        tab.rows.remove(r);
                        tab.rhs.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // Phase 2 with the true objective.
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.c);
        let mut value = 0.0;
        for (row, (&bj, &rh)) in tab.rows.iter().zip(tab.basis.iter().zip(&tab.rhs)) {
            let cb = self.c[bj];
            if cb != 0.0 {
                for (cj, &v) in cost.iter_mut().zip(row) {
                    *cj -= cb * v;
                }
                value += cb * rh;
            }
        }
        tab.cost = cost;
        tab.value = value;
        if !tab.optimize(max_iter)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![0.0; n];
        for (&bj, &v) in tab.basis.iter().zip(&tab.rhs) {
            if bj < n {
                x[bj] = v.max(0.0);
            }
        }
        let objective = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        // residual check on the original system
        let resid = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| (row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - bi).abs())
            .fold(0.0, f64::max);
        if resid > 1e-7 * scale {
            return Err(Error::LpNumericalFailure(format!(
                "solution residual {resid:e} too large"
            )));
        }
        Ok(LpOutcome::Optimal { x, objective })
    }
}
