//! Overlap between the two response groups.
//!
//! The MLE of an intercept-plus-slope binary regression is finite and
//! unique exactly when the open convex cones spanned by the extended
//! predictors `(1, x_i)` of each group intersect. For scalar `x` this
//! reduces to comparisons of the group ranges; in general it is decided by
//! a small linear program.

use serde::Serialize;

use crate::data::{Dataset, DesignMatrix};
use crate::error::{Error, Result};
use crate::simplex::{LinearProgram, LpOutcome};

/// Cone LP margins at or below this count as separation.
pub const DEFAULT_MIN_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OverlapVerdict {
    Overlap,
    Separated,
    DegenerateAllEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OverlapMethod {
    ScalarIntervals,
    ConeLP,
}

/// Group ranges `[l0, u0]` (y = 0) and `[l1, u1]` (y = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalBounds {
    pub l0: f64,
    pub u0: f64,
    pub l1: f64,
    pub u1: f64,
}

/// Strictly positive weights with `sum k_i x~_i = sum m_j x~_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeCertificate {
    /// Weight per row, `k_i` for y = 1 rows and `m_j` for y = 0 rows.
    pub weights: Vec<f64>,
    /// Smallest weight achieved by the LP (after `sum weights = 1`).
    pub margin: f64,
    /// Max-abs residual of the cone equality on the original predictors,
    /// relative to the largest extended predictor entry.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OverlapWitness {
    Intervals(IntervalBounds),
    Cone(ConeCertificate),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub verdict: OverlapVerdict,
    pub method: OverlapMethod,
    pub witness: OverlapWitness,
    /// Sign of the diverging slope for scalar separation.
    pub direction_hint: Option<i8>,
    /// Scalar only: one group collapses to a point tied with an extreme of
    /// the other group (quasi-complete separation).
    pub tied_corner: bool,
}

impl OverlapReport {
    pub fn margin(&self) -> Option<f64> {
        match &self.witness {
            OverlapWitness::Cone(c) => Some(c.margin),
            OverlapWitness::Intervals(_) => None,
        }
    }

    pub fn bounds(&self) -> Option<IntervalBounds> {
        match &self.witness {
            OverlapWitness::Intervals(b) => Some(*b),
            OverlapWitness::Cone(_) => None,
        }
    }
}

pub fn interval_bounds(ds: &Dataset) -> Result<IntervalBounds> {
    if ds.d() != 1 {
        return Err(Error::DimensionError {
            expected: 1,
            found: ds.d(),
        });
    }
    let mut b = IntervalBounds {
        l0: f64::INFINITY,
        u0: f64::NEG_INFINITY,
        l1: f64::INFINITY,
        u1: f64::NEG_INFINITY,
    };
    for (xi, yi) in ds.rows() {
        let v = xi[0];
        if yi == 1 {
            b.l1 = b.l1.min(v);
            b.u1 = b.u1.max(v);
        } else {
            b.l0 = b.l0.min(v);
            b.u0 = b.u0.max(v);
        }
    }
    Ok(b)
}

/// Whether one group is a single point tied with an extreme of the other.
fn is_tied_corner(b: &IntervalBounds) -> bool {
    (b.l0 == b.u0 && b.u0 == b.l1 && b.l1 < b.u1)
        || (b.l1 < b.u1 && b.u1 == b.l0 && b.l0 == b.u0)
        || (b.l1 == b.u1 && b.u1 == b.l0 && b.l0 < b.u0)
        || (b.l0 < b.u0 && b.u0 == b.l1 && b.l1 == b.u1)
}

/// Decide overlap for scalar `x` from the group ranges.
///
/// Overlap iff `l0 < u1` and `l1 < u0`. All-equal data is reported as
/// degenerate; everything else is separated, with the slope diverging to
/// `+inf` when `u0 <= l1` and to `-inf` when `u1 <= l0`. Floats are compared
/// exactly.
pub fn scalar_overlap(ds: &Dataset) -> Result<OverlapReport> {
    let b = interval_bounds(ds)?;
    let tied_corner = is_tied_corner(&b);
    let (verdict, direction_hint) = if b.l0 == b.u0 && b.u0 == b.l1 && b.l1 == b.u1 {
        (OverlapVerdict::DegenerateAllEqual, None)
    } else if b.l0 < b.u1 && b.l1 < b.u0 {
        (OverlapVerdict::Overlap, None)
    } else if b.u0 <= b.l1 {
        (OverlapVerdict::Separated, Some(1))
    } else {
        (OverlapVerdict::Separated, Some(-1))
    };
    Ok(OverlapReport {
        verdict,
        method: OverlapMethod::ScalarIntervals,
        witness: OverlapWitness::Intervals(b),
        direction_hint,
        tied_corner,
    })
}

/// Decide overlap of the open cones spanned by each group's extended
/// predictors.
///
/// Solves `max t` subject to `sum_{y=1} k_i x~_i - sum_{y=0} m_j x~_j = 0`,
/// `k_i, m_j >= t`, `sum k + sum m = 1`; overlap iff the optimum exceeds
/// `min_margin`. Predictor columns are centered and scaled to unit max-abs
/// first; that is an invertible linear map of `x~`, so the weights solve the
/// original system too.
pub fn cone_overlap(dm: &DesignMatrix, y: &[u8], min_margin: f64) -> Result<OverlapReport> {
    let xt = &dm.xt;
    let (n, p) = (xt.nrows(), xt.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            row: n.min(y.len()),
            expected: n,
            found: y.len(),
        });
    }
    let n1 = y.iter().filter(|&&v| v == 1).count();
    if n1 == 0 || n1 == n {
        return Err(Error::EmptyGroup {
            group: if n1 == 0 { 1 } else { 0 },
            n0: n - n1,
            n1,
        });
    }

    let all_equal = (1..n).all(|i| xt.row(i) == xt.row(0));
    if all_equal {
        return Ok(OverlapReport {
            verdict: OverlapVerdict::DegenerateAllEqual,
            method: OverlapMethod::ConeLP,
            witness: OverlapWitness::Cone(ConeCertificate {
                weights: vec![1.0 / n as f64; n],
                margin: 0.0,
                residual: 0.0,
            }),
            direction_hint: None,
            tied_corner: false,
        });
    }

    // centered, max-abs scaled predictor columns
    let mut scaled = xt.clone();
    for j in 1..p {
        let mut col = scaled.column_mut(j);
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let s = col.amax();
        if s > 0.0 {
            col /= s;
        }
    }

    let sign: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    // variables: u_0..u_{n-1}, t ; weight_i = u_i + t
    let mut a = Vec::with_capacity(p + 1);
    for c in 0..p {
        let mut row = Vec::with_capacity(n + 1);
        let mut t_coef = 0.0;
        for i in 0..n {
            let v = sign[i] * scaled[(i, c)];
            row.push(v);
            t_coef += v;
        }
        row.push(t_coef);
        a.push(row);
    }
    let mut norm_row = vec![1.0; n];
    norm_row.push(n as f64);
    a.push(norm_row);
    let mut b = vec![0.0; p];
    b.push(1.0);
    let mut c = vec![0.0; n];
    c.push(1.0);

    let lp = LinearProgram { a, b, c };
    let (weights, margin) = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let t = x[n];
            (x[..n].iter().map(|u| u + t).collect::<Vec<_>>(), t)
        }
        LpOutcome::Infeasible => (vec![0.0; n], 0.0),
        LpOutcome::Unbounded => {
            return Err(Error::LpNumericalFailure("cone LP unbounded".into()));
        }
    };

    let residual = cone_residual(dm, y, &weights);
    let verdict = if margin > min_margin {
        if residual > 1e-8 {
            return Err(Error::LpNumericalFailure(format!(
                "cone witness residual {residual:e} exceeds 1e-8"
            )));
        }
        OverlapVerdict::Overlap
    } else {
        OverlapVerdict::Separated
    };
    Ok(OverlapReport {
        verdict,
        method: OverlapMethod::ConeLP,
        witness: OverlapWitness::Cone(ConeCertificate {
            weights,
            margin,
            residual,
        }),
        direction_hint: None,
        tied_corner: false,
    })
}

/// `max_c |sum_i s_i w_i x~_ic| / max|x~|` on the unscaled design.
pub fn cone_residual(dm: &DesignMatrix, y: &[u8], weights: &[f64]) -> f64 {
    let xt = &dm.xt;
    let scale = xt.amax().max(1.0);
    (0..xt.ncols())
        .map(|c| {
            let s: f64 = (0..xt.nrows())
                .map(|i| {
                    let sgn = if y[i] == 1 { 1.0 } else { -1.0 };
                    sgn * weights[i] * xt[(i, c)]
                })
                .sum();
            s.abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Cone test on a data set, falling back to the scalar rule when the LP
/// fails and `d = 1`.
pub fn check_overlap(ds: &Dataset) -> Result<OverlapReport> {
    let dm = crate::data::extended_design(ds, crate::data::DEFAULT_RANK_TOLERANCE);
    match cone_overlap(&dm, ds.y(), DEFAULT_MIN_MARGIN) {
        Err(Error::LpNumericalFailure(_)) if ds.d() == 1 => scalar_overlap(ds),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{extended_design, DEFAULT_RANK_TOLERANCE};

    fn ds1(x: &[f64], y: &[u8]) -> Dataset {
        Dataset::from_scalar(x, y).unwrap()
    }

    fn cone(ds: &Dataset) -> OverlapReport {
        let dm = extended_design(ds, DEFAULT_RANK_TOLERANCE);
        cone_overlap(&dm, ds.y(), DEFAULT_MIN_MARGIN).unwrap()
    }

    #[test]
    fn scalar_cases() {
        let r = scalar_overlap(&ds1(&[1.0, 3.0, 2.0, 4.0], &[0, 0, 1, 1])).unwrap();
        assert_eq!(r.verdict, OverlapVerdict::Overlap);
        assert_eq!(
            r.bounds().unwrap(),
            IntervalBounds {
                l0: 1.0,
                u0: 3.0,
                l1: 2.0,
                u1: 4.0
            }
        );

        let r = scalar_overlap(&ds1(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1])).unwrap();
        assert_eq!(r.verdict, OverlapVerdict::Separated);
        assert_eq!(r.direction_hint, Some(1));

        let r = scalar_overlap(&ds1(&[4.0, 3.0, 2.0, 1.0], &[0, 0, 1, 1])).unwrap();
        assert_eq!(r.direction_hint, Some(-1));

        let r = scalar_overlap(&ds1(&[7.0, 7.0, 7.0], &[0, 1, 0])).unwrap();
        assert_eq!(r.verdict, OverlapVerdict::DegenerateAllEqual);

        // y=1 group a single point strictly inside the y=0 range
        let r = scalar_overlap(&ds1(&[0.0, 2.0, 1.0], &[0, 0, 1])).unwrap();
        assert_eq!(r.verdict, OverlapVerdict::Overlap);
    }

    #[test]
    fn tied_corners_are_quasi_separated() {
        // x0 = {2}, x1 = {2, 2, 5}: l0 = u0 = l1 < u1
        let r = scalar_overlap(&ds1(&[2.0, 2.0, 2.0, 5.0], &[0, 1, 1, 1])).unwrap();
        assert!(r.tied_corner);
        assert_eq!(r.verdict, OverlapVerdict::Separated);
        assert_eq!(r.direction_hint, Some(1));
        let patterns: [(&[f64], &[u8], i8); 4] = [
            (&[2.0, 2.0, 5.0], &[0, 1, 1], 1),
            (&[2.0, 2.0, 0.0], &[0, 1, 1], -1),
            (&[2.0, 2.0, 5.0], &[1, 0, 0], -1),
            (&[2.0, 2.0, 0.0], &[1, 0, 0], 1),
        ];
        for (x, y, hint) in patterns {
            let ds = ds1(x, y);
            let r = scalar_overlap(&ds).unwrap();
            assert!(r.tied_corner, "{x:?} {y:?}");
            assert_eq!(r.verdict, OverlapVerdict::Separated);
            assert_eq!(r.direction_hint, Some(hint));
            assert_eq!(cone(&ds).verdict, OverlapVerdict::Separated);
        }
    }

    #[test]
    fn scalar_requires_d1() {
        let ds = Dataset::from_parts(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1]).unwrap();
        assert!(matches!(
            scalar_overlap(&ds),
            Err(Error::DimensionError {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn cone_cases() {
        let ds = Dataset::from_parts(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let r = cone(&ds);
        assert_eq!(r.verdict, OverlapVerdict::Overlap);
        assert!(r.margin().unwrap() > DEFAULT_MIN_MARGIN);
        if let OverlapWitness::Cone(c) = &r.witness {
            assert!(c.residual <= 1e-8);
            assert!(c.weights.iter().all(|&w| w >= c.margin - 1e-15));
        }

        let ds = Dataset::from_parts(
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![2.0, 0.0],
                vec![2.0, 1.0],
            ],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        assert_eq!(cone(&ds).verdict, OverlapVerdict::Separated);

        assert_eq!(
            cone(&ds1(&[7.0, 7.0, 7.0], &[0, 1, 0])).verdict,
            OverlapVerdict::DegenerateAllEqual
        );
        assert_eq!(
            cone(&ds1(&[1.0, 3.0, 2.0, 4.0], &[0, 0, 1, 1])).verdict,
            OverlapVerdict::Overlap
        );
        assert_eq!(
            cone(&ds1(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1])).verdict,
            OverlapVerdict::Separated
        );
    }

    #[test]
    fn check_overlap_uses_cone() {
        let r = check_overlap(&ds1(&[1.0, 3.0, 2.0, 4.0], &[0, 0, 1, 1])).unwrap();
        assert_eq!(r.method, OverlapMethod::ConeLP);
    }
}
