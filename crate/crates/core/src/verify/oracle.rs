//! Brute-force MLE by nested grid refinement, used as an optimizer-free
//! reference for the Newton fit on small problems.

use crate::data::{overall_mean, Dataset};
use crate::error::{Error, Result};
use crate::links::InverseLink;
use crate::mle::{log_likelihood, Parameters};

/// Search box. The intercept range applies to `a` in the centered
/// parameterization `eta = a + beta^T (x - xbar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub intercept: (f64, f64),
    pub slopes: Vec<(f64, f64)>,
}

impl GridBox {
    pub fn symmetric(d: usize, half_width: f64) -> Self {
        Self {
            intercept: (-half_width, half_width),
            slopes: vec![(-half_width, half_width); d],
        }
    }
}

/// Points per axis in each sweep; odd, so the center is a grid point.
const POINTS: usize = 21;

/// Upper bound on sweeps that move the center without shrinking.
const MAX_MOVES: usize = 10_000;

/// Grid pattern search on the log likelihood. Each sweep evaluates a
/// `21^(d+1)` grid around the current center. If some grid point beats the
/// center the search moves there at the same scale; otherwise the box is
/// halved. Stops after `levels` halvings. On a concave surface the search
/// cannot stall short of the maximum, even along narrow ridges. The grid is
/// clamped to the outer box; fails with `OracleBoundsError` if the final
/// point lies on its boundary.
pub fn grid_mle<L: InverseLink + ?Sized>(
    ds: &Dataset,
    link: &L,
    bounds: &GridBox,
    levels: usize,
) -> Result<Parameters> {
    let d = ds.d();
    if d > 2 || bounds.slopes.len() != d {
        return Err(Error::DimensionError {
            expected: bounds.slopes.len().min(2),
            found: d,
        });
    }
    if ds.n() > 20 {
        return Err(Error::PreconditionError(format!(
            "grid oracle limited to n <= 20, got {}",
            ds.n()
        )));
    }
    let xbar = overall_mean(ds);
    let outer: Vec<(f64, f64)> = std::iter::once(bounds.intercept)
        .chain(bounds.slopes.iter().copied())
        .collect();
    let dims = outer.len();
    let mut center: Vec<f64> = outer.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut half: Vec<f64> = outer.iter().map(|(lo, hi)| 0.5 * (hi - lo)).collect();

    let to_params = |theta: &[f64]| {
        let beta = theta[1..].to_vec();
        let shift: f64 = beta.iter().zip(&xbar).map(|(b, m)| b * m).sum();
        Parameters {
            alpha: theta[0] - shift,
            beta,
        }
    };
    let objective = |theta: &[f64]| log_likelihood(ds, link, &to_params(theta));

    let mut center_ll = objective(&center);
    let mut halvings = 0;
    let mut moves = 0;
    let mut theta = vec![0.0; dims];
    let mut best = center.clone();
    while halvings < levels {
        let mut best_ll = center_ll;
        best.copy_from_slice(&center);
        for idx in 0..POINTS.pow(dims as u32) {
            let mut rem = idx;
            for k in 0..dims {
                let i = rem % POINTS;
                rem /= POINTS;
                let frac = i as f64 / (POINTS - 1) as f64;
                let (lo, hi) = outer[k];
                theta[k] = (center[k] - half[k] + 2.0 * half[k] * frac).clamp(lo, hi);
            }
            let ll = objective(&theta);
            if ll > best_ll {
                best_ll = ll;
                best.copy_from_slice(&theta);
            }
        }
        if best_ll > center_ll && moves < MAX_MOVES {
            moves += 1;
            center.copy_from_slice(&best);
            center_ll = best_ll;
        } else {
            for h in half.iter_mut() {
                *h *= 0.5;
            }
            halvings += 1;
        }
    }
    for k in 0..dims {
        let (lo, hi) = outer[k];
        let tol = 1e-9 * (hi - lo);
        if center[k] <= lo + tol || center[k] >= hi - tol {
            return Err(Error::OracleBoundsError { coord: k });
        }
    }
    Ok(to_params(&center))
}
