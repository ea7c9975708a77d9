//! Checks tying the fitted slope to the group mean difference.
//!
//! * sign match for scalar `x`: `sign(beta) = sign(xbar1 - xbar0)`;
//! * zero equivalence: `beta = 0` exactly when `xbar1 = xbar0`, and then
//!   `alpha = G^{-1}(n1/n)`;
//! * acute angle: `beta^T (xbar1 - xbar0) > 0` whenever the means differ.
//!
//! All zero thresholds are applied in the standardized coordinates of the
//! fit (`FitResult::x_scale`), so they do not depend on predictor units.

pub mod generate;
pub mod oracle;
pub mod suite;

use serde::Serialize;

use crate::data::{group_stats, Dataset, GroupStats};
use crate::error::{Error, Result};
use crate::links::InverseLink;
use crate::mle::{FitResult, FitStatus};

pub use generate::{gen_balanced, gen_gaussian, gen_overlapping, gen_separated, SeededRng};
pub use oracle::{grid_mle, GridBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    SignMatch,
    ZeroIffEqualMeans,
    AcuteAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub theorem: Theorem,
    pub holds: bool,
    /// Signed margin; `beta^T delta` for sign and angle checks, slope norm
    /// for zero equivalence.
    pub slack: f64,
    pub details: String,
}

/// Thresholds below which quantities count as zero (standardized scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTolerances {
    /// Mean difference threshold.
    pub mean: f64,
    /// Fitted slope threshold.
    pub slope: f64,
    /// Allowed `|alpha - G^{-1}(n1/n)|` when the slope is zero.
    pub intercept: f64,
}

impl Default for ZeroTolerances {
    fn default() -> Self {
        Self {
            mean: 1e-8,
            slope: 1e-6,
            intercept: 1e-8,
        }
    }
}

fn sign_with_tol(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

fn standardized_delta(fr: &FitResult, gs: &GroupStats) -> Vec<f64> {
    gs.delta
        .iter()
        .zip(&fr.x_scale)
        .map(|(d, s)| d / s)
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compare `sign(beta)` with `sign(xbar1 - xbar0)` for scalar `x`.
///
/// A diverged fit carries the sign of its last iterate, i.e. the sign of
/// the infinite slope.
pub fn check_sign(fr: &FitResult, gs: &GroupStats, tol: &ZeroTolerances) -> Result<TheoremReport> {
    if gs.delta.len() != 1 || fr.params.beta.len() != 1 {
        return Err(Error::DimensionError {
            expected: 1,
            found: gs.delta.len(),
        });
    }
    let beta_sign = match fr.status {
        FitStatus::Converged => sign_with_tol(fr.standardized_beta[0], tol.slope),
        FitStatus::Diverged => sign_with_tol(fr.standardized_beta[0], 0.0),
        other => {
            return Err(Error::PreconditionError(format!(
                "sign check needs a converged or diverged fit, got {other:?}"
            )))
        }
    };
    let delta_sign = sign_with_tol(standardized_delta(fr, gs)[0], tol.mean);
    let slack = fr.params.beta[0] * gs.delta[0];
    Ok(TheoremReport {
        theorem: Theorem::SignMatch,
        holds: beta_sign == delta_sign,
        slack,
        details: format!(
            "sign(beta) = {beta_sign}, sign(delta) = {delta_sign}, status {:?}",
            fr.status
        ),
    })
}

/// `beta^T (xbar1 - xbar0) > 0` for a converged fit with distinct means.
pub fn check_angle(fr: &FitResult, gs: &GroupStats, tol: &ZeroTolerances) -> Result<TheoremReport> {
    if fr.status != FitStatus::Converged {
        return Err(Error::PreconditionError(format!(
            "angle check needs a converged fit, got {:?}",
            fr.status
        )));
    }
    let dn = norm(&standardized_delta(fr, gs));
    if dn <= tol.mean {
        return Err(Error::PreconditionError(format!(
            "group means coincide (|delta| = {dn:e}); zero equivalence applies instead"
        )));
    }
    let slack = dot(&fr.params.beta, &gs.delta);
    Ok(TheoremReport {
        theorem: Theorem::AcuteAngle,
        holds: slack > 0.0,
        slack,
        details: format!("beta^T delta = {slack:e}, |delta|_std = {dn:e}"),
    })
}

/// Test both directions of "slope is zero iff the group means coincide" on
/// one data set, using `fit_fn` to obtain the MLE.
pub fn check_zero_iff<L, F>(
    ds: &Dataset,
    link: &L,
    fit_fn: F,
    tol: &ZeroTolerances,
) -> Result<TheoremReport>
where
    L: InverseLink + ?Sized,
    F: FnOnce(&Dataset, &L) -> Result<FitResult>,
{
    let fr = fit_fn(ds, link)?;
    if fr.status != FitStatus::Converged {
        return Err(Error::PreconditionError(format!(
            "zero equivalence needs a unique converged fit, got {:?}",
            fr.status
        )));
    }
    let gs = group_stats(ds);
    let delta_zero = norm(&standardized_delta(&fr, &gs)) <= tol.mean;
    let slope = norm(&fr.standardized_beta);
    let slope_zero = slope <= tol.slope;
    let target_alpha = link.inverse(ds.n1() as f64 / ds.n() as f64)?;
    let alpha_gap = (fr.params.alpha - target_alpha).abs();

    let forward = !delta_zero || (slope_zero && alpha_gap <= tol.intercept);
    let converse = !slope_zero || delta_zero;
    Ok(TheoremReport {
        theorem: Theorem::ZeroIffEqualMeans,
        holds: forward && converse,
        slack: slope,
        details: format!(
            "delta zero: {delta_zero}, slope zero: {slope_zero} (|beta|_std = {slope:e}), \
             |alpha - G^-1(n1/n)| = {alpha_gap:e}"
        ),
    })
}

/// Shift every `y = 1` row by the mean difference: `x*_i = x_i - y_i delta`.
/// The shifted groups have equal means.
pub fn shift_dataset(ds: &Dataset) -> Dataset {
    let gs = group_stats(ds);
    let x = ds
        .rows()
        .map(|(xi, yi)| {
            if yi == 1 {
                xi.iter().zip(&gs.delta).map(|(v, d)| v - d).collect()
            } else {
                xi.to_vec()
            }
        })
        .collect();
    Dataset::from_parts(x, ds.y().to_vec()).expect("shift preserves labels and dimension")
}
