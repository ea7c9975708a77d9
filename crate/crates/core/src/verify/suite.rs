//! Seeded randomized trials for the slope/mean-difference checks.
//!
//! Each trial is a pure function of `(link, d, base seed, index)`, so
//! callers may run trials in any order or in parallel and still aggregate
//! deterministically.

use serde::Serialize;

use super::generate::{gen_overlapping, trial_seed, SeededRng};
use super::{
    check_angle, check_sign, check_zero_iff, shift_dataset, Theorem, TheoremReport, ZeroTolerances,
};
use crate::data::{extended_design, group_stats, DEFAULT_RANK_TOLERANCE};
use crate::error::Result;
use crate::links::{InverseLink, Link};
use crate::mle::{fit, FitOptions, Parameters};

/// Sample sizes are drawn uniformly from this range.
pub const N_RANGE: (usize, usize) = (6, 40);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TrialOutcome {
    Checked(TheoremReport),
    /// Theorem preconditions not met (e.g. the fit did not converge).
    Skipped(String),
    /// Generation or fitting raised an error.
    Error(String),
}

fn draw_n(seed: u64) -> usize {
    SeededRng::new(seed ^ 0x5EED).int_in(N_RANGE.0, N_RANGE.1)
}

/// Sign match on a random overlapping scalar data set.
pub fn sign_trial(link: Link, base_seed: u64, index: u64) -> TrialOutcome {
    let run = || -> Result<TrialOutcome> {
        let seed = trial_seed(base_seed, index);
        let ds = gen_overlapping(draw_n(seed), 1, seed)?;
        let fr = fit(&ds, &link, &FitOptions::default())?;
        let gs = group_stats(&ds);
        Ok(TrialOutcome::Checked(check_sign(
            &fr,
            &gs,
            &ZeroTolerances::default(),
        )?))
    };
    run().unwrap_or_else(|e| TrialOutcome::Error(e.to_string()))
}

/// Acute angle on a random overlapping data set in `d` dimensions.
/// Non-converged fits are skipped.
pub fn angle_trial(link: Link, d: usize, base_seed: u64, index: u64) -> TrialOutcome {
    let run = || -> Result<TrialOutcome> {
        let seed = trial_seed(base_seed, index);
        let ds = gen_overlapping(draw_n(seed).max(d + 2), d, seed)?;
        let fr = fit(&ds, &link, &FitOptions::default())?;
        let gs = group_stats(&ds);
        match check_angle(&fr, &gs, &ZeroTolerances::default()) {
            Ok(r) => Ok(TrialOutcome::Checked(r)),
            Err(crate::Error::PreconditionError(msg)) => Ok(TrialOutcome::Skipped(msg)),
            Err(e) => Err(e),
        }
    };
    run().unwrap_or_else(|e| TrialOutcome::Error(e.to_string()))
}

/// Zero equivalence, both directions: the shifted (equal-means) data set
/// must fit to `beta = 0, alpha = G^{-1}(n1/n)`, and the unshifted one must
/// not fit to a zero slope. The shifted fit starts away from the optimum.
pub fn zero_trial(link: Link, d: usize, base_seed: u64, index: u64) -> TrialOutcome {
    let run = || -> Result<TrialOutcome> {
        let seed = trial_seed(base_seed, index);
        let original = gen_overlapping(draw_n(seed).max(d + 2), d, seed)?;
        let balanced = shift_dataset(&original);
        if !extended_design(&balanced, DEFAULT_RANK_TOLERANCE).rank_ok {
            return Ok(TrialOutcome::Skipped("shifted design lost rank".into()));
        }
        let tol = ZeroTolerances::default();
        let start = Parameters {
            alpha: link.inverse(balanced.n1() as f64 / balanced.n() as f64)? + 0.3,
            beta: vec![0.5; d],
        };
        let opts = FitOptions {
            start: Some(start),
            ..FitOptions::default()
        };
        let forward = check_zero_iff(&balanced, &link, |ds, l| fit(ds, l, &opts), &tol)?;
        let converse = check_zero_iff(
            &original,
            &link,
            |ds, l| fit(ds, l, &FitOptions::default()),
            &tol,
        )?;
        Ok(TrialOutcome::Checked(TheoremReport {
            theorem: Theorem::ZeroIffEqualMeans,
            holds: forward.holds && converse.holds,
            slack: forward.slack,
            details: format!(
                "shifted: {}; original: {}",
                forward.details, converse.details
            ),
        }))
    };
    run().unwrap_or_else(|e| TrialOutcome::Error(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub theorem: Theorem,
    pub link: Link,
    pub dims: usize,
    pub trials: usize,
    pub passes: usize,
    pub failures: usize,
    pub skipped: usize,
    /// Smallest `beta^T delta` for sign/angle; largest standardized slope
    /// norm on equal-means data for zero equivalence.
    pub worst_slack: Option<f64>,
    /// Index of the first failing trial, if any.
    pub first_failure: Option<usize>,
}

impl SuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn summarize(
    theorem: Theorem,
    link: Link,
    dims: usize,
    outcomes: &[TrialOutcome],
) -> SuiteSummary {
    let mut s = SuiteSummary {
        theorem,
        link,
        dims,
        trials: outcomes.len(),
        passes: 0,
        failures: 0,
        skipped: 0,
        worst_slack: None,
        first_failure: None,
    };
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            TrialOutcome::Checked(r) => {
                if r.holds {
                    s.passes += 1;
                } else {
                    s.failures += 1;
                    s.first_failure.get_or_insert(i);
                }
                let worse = |cur: f64| match theorem {
                    Theorem::ZeroIffEqualMeans => r.slack > cur,
                    _ => r.slack < cur,
                };
                if s.worst_slack.map_or(true, worse) {
                    s.worst_slack = Some(r.slack);
                }
            }
            TrialOutcome::Skipped(_) => s.skipped += 1,
            TrialOutcome::Error(_) => {
                s.failures += 1;
                s.first_failure.get_or_insert(i);
            }
        }
    }
    s
}

/// Run one suite sequentially.
pub fn run_suite(theorem: Theorem, link: Link, d: usize, trials: usize, seed: u64) -> SuiteSummary {
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .map(|i| run_trial(theorem, link, d, seed, i))
        .collect();
    summarize(theorem, link, d, &outcomes)
}

pub fn run_trial(theorem: Theorem, link: Link, d: usize, seed: u64, index: u64) -> TrialOutcome {
    match theorem {
        Theorem::SignMatch => sign_trial(link, seed, index),
        Theorem::AcuteAngle => angle_trial(link, d, seed, index),
        Theorem::ZeroIffEqualMeans => zero_trial(link, d, seed, index),
    }
}

/// Whether failures for `link` should count against verification.
pub fn is_certified(link: &dyn InverseLink) -> bool {
    link.claims_log_concave()
}
