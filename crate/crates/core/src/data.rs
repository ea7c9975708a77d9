//! Binary-response data: the validated [`Dataset`], per-group means and
//! the intercept-extended design matrix.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative threshold on singular values used by [`extended_design`].
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// Immutable binary-response data set.
///
/// Rows are `(x_i, y_i)` with `x_i` in R^d and `y_i` in {0, 1}. Both groups
/// are non-empty and every predictor is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    n0: usize,
    n1: usize,
}

impl Dataset {
    /// Validate and build a data set from `(predictors, label)` rows.
    ///
    /// Labels are given as reals so that file input can be checked here;
    /// anything other than exactly `0.0` or `1.0` is rejected.
    pub fn new<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut dim = None;
        for (row, (xi, yi)) in rows.into_iter().enumerate() {
            let d = *dim.get_or_insert(xi.len());
            if xi.len() != d || d == 0 {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: d.max(1),
                    found: xi.len(),
                });
            }
            if let Some(col) = xi.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row, col });
            }
            let label = if yi == 0.0 {
                0
            } else if yi == 1.0 {
                1
            } else {
                return Err(Error::NonBinaryLabel { row, value: yi });
            };
            x.push(xi);
            y.push(label);
        }
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        Self::from_parts(x, y)
    }

    /// Build from already-separated columns. Labels must be 0 or 1.
    pub fn from_parts(x: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                row: x.len().min(y.len()),
                expected: x.len(),
                found: y.len(),
            });
        }
        let d = x[0].len();
        for (row, xi) in x.iter().enumerate() {
            if xi.len() != d || d == 0 {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: d.max(1),
                    found: xi.len(),
                });
            }
            if let Some(col) = xi.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row, col });
            }
        }
        if let Some(row) = y.iter().position(|&v| v > 1) {
            return Err(Error::NonBinaryLabel {
                row,
                value: f64::from(y[row]),
            });
        }
        let n1 = y.iter().filter(|&&v| v == 1).count();
        let n0 = y.len() - n1;
        if n0 == 0 || n1 == 0 {
            return Err(Error::EmptyGroup {
                group: if n0 == 0 { 0 } else { 1 },
                n0,
                n1,
            });
        }
        Ok(Self { x, y, n0, n1 })
    }

    /// Convenience constructor for one-dimensional predictors.
    pub fn from_scalar(x: &[f64], y: &[u8]) -> Result<Self> {
        Self::from_parts(x.iter().map(|&v| vec![v]).collect(), y.to_vec())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x[0].len()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], u8)> + '_ {
        self.x.iter().map(Vec::as_slice).zip(self.y.iter().copied())
    }

    /// Read a data set from CSV with a header row and a `y` column.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Csv(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    /// Parse CSV input. All non-`y` columns are predictors, in header order.
    /// Row indices in errors count data rows from 0, excluding the header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_col = headers
            .iter()
            .position(|h| h == "y")
            .ok_or(Error::MissingLabelColumn)?;
        let mut rows = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let mut xi = Vec::with_capacity(record.len().saturating_sub(1));
            let mut yi = f64::NAN;
            for (col, cell) in record.iter().enumerate() {
                let value = parse_cell(cell, row, col)?;
                if col == label_col {
                    yi = value;
                } else {
                    xi.push(value);
                }
            }
            rows.push((xi, yi));
        }
        Self::new(rows)
    }

    /// Write the data set as CSV with columns `x1..xd,y`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let names: Vec<String> = (1..=self.d()).map(|j| format!("x{j}")).collect();
        out.push_str(&names.join(","));
        out.push_str(",y\n");
        for (xi, yi) in self.rows() {
            for v in xi {
                out.push_str(&format!("{v:?},"));
            }
            out.push_str(&format!("{yi}\n"));
        }
        out
    }
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
        row,
        col,
        cell: cell.to_string(),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteValue { row, col });
    }
    Ok(value)
}

/// Group means of the predictors and their difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub xbar0: Vec<f64>,
    pub xbar1: Vec<f64>,
    /// `xbar1 - xbar0`
    pub delta: Vec<f64>,
}

impl GroupStats {
    pub fn delta_norm(&self) -> f64 {
        self.delta.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn group_stats(ds: &Dataset) -> GroupStats {
    let d = ds.d();
    let mut s0 = vec![KahanSum::default(); d];
    let mut s1 = vec![KahanSum::default(); d];
    for (xi, yi) in ds.rows() {
        let acc = if yi == 1 { &mut s1 } else { &mut s0 };
        for (a, &v) in acc.iter_mut().zip(xi) {
            a.add(v);
        }
    }
    let xbar0: Vec<f64> = s0.iter().map(|s| s.value() / ds.n0() as f64).collect();
    let xbar1: Vec<f64> = s1.iter().map(|s| s.value() / ds.n1() as f64).collect();
    let delta = xbar1.iter().zip(&xbar0).map(|(a, b)| a - b).collect();
    GroupStats {
        xbar0,
        xbar1,
        delta,
    }
}

/// Column means of the predictors over all rows.
pub fn overall_mean(ds: &Dataset) -> Vec<f64> {
    let mut acc = vec![KahanSum::default(); ds.d()];
    for xi in ds.x() {
        for (a, &v) in acc.iter_mut().zip(xi) {
            a.add(v);
        }
    }
    acc.iter().map(|s| s.value() / ds.n() as f64).collect()
}

/// The n x (d+1) matrix with rows `(1, x_i^T)`, plus its rank check.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub xt: DMatrix<f64>,
    pub rank: usize,
    pub rank_ok: bool,
    pub rank_tolerance: f64,
}

pub fn extended_design(ds: &Dataset, rank_tolerance: f64) -> DesignMatrix {
    let (n, d) = (ds.n(), ds.d());
    let xt = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { ds.x()[i][j - 1] });
    let rank = numerical_rank(&xt, rank_tolerance);
    DesignMatrix {
        rank,
        rank_ok: rank == d + 1,
        rank_tolerance,
        xt,
    }
}

/// Number of singular values above `tol` times the largest one.
///
/// Columns are scaled to unit max-abs first so that the relative threshold
/// does not depend on the units of each predictor.
pub(crate) fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut scaled = m.clone();
    for mut col in scaled.column_iter_mut() {
        let s = col.amax();
        if s > 0.0 {
            col /= s;
        }
    }
    let sv = scaled.singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}
