//! Reference values computed independently of the library code paths.

use binreg_core::data::{extended_design, Dataset, DEFAULT_RANK_TOLERANCE};
use binreg_core::links::{InverseLink, Link};
use binreg_core::mle::{fit, log_likelihood, FitOptions, FitStatus, Parameters};
use binreg_core::overlap::{cone_overlap, OverlapVerdict, DEFAULT_MIN_MARGIN};
use binreg_core::simplex::{LinearProgram, LpOutcome};
use binreg_core::verify::SeededRng;
use nalgebra::{DMatrix, DVector};

/// `erf` by its Maclaurin series; accurate to rounding for |x| <= 1.5.
fn erf_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = x; // (-1)^n x^(2n+1) / n!
    for n in 0..80 {
        sum += term / (2 * n + 1) as f64;
        term *= -x * x / (n + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

fn phi_series(z: f64) -> f64 {
    0.5 * (1.0 + erf_series(z / std::f64::consts::SQRT_2))
}

#[test]
fn probit_loglik_matches_series_reference() {
    // eta = -2 + x: -1, 1, 0, 2 with labels 0, 0, 1, 1
    let ds = Dataset::from_scalar(&[1.0, 3.0, 2.0, 4.0], &[0, 0, 1, 1]).unwrap();
    let p = Parameters {
        alpha: -2.0,
        beta: vec![1.0],
    };
    let expected = (1.0 - phi_series(-1.0)).ln()
        + (1.0 - phi_series(1.0)).ln()
        + phi_series(0.0).ln()
        + phi_series(2.0).ln();
    let got = log_likelihood(&ds, &Link::Probit, &p);
    assert!(
        (got - expected).abs() <= 1e-14 * expected.abs(),
        "{got} vs {expected}"
    );
}

#[test]
fn probit_quantile() {
    let z = Link::Probit.inverse(0.975).unwrap();
    assert!((z - 1.959_963_984_540_054).abs() < 1e-12, "{z}");
    let z = Link::Probit.inverse(0.5).unwrap();
    assert!(z.abs() < 1e-15);
}

#[test]
fn logit_tails() {
    // log G(z) = -log(1 + e^-z) = z - log(1 + e^z)
    assert_eq!(Link::Logit.log_cdf(-800.0), -800.0);
    assert_eq!(Link::Logit.log_sf(800.0), -800.0);
    let v = Link::Logit.log_cdf(-5.0);
    assert!((v - (-5.006_715_348_489_118)).abs() < 1e-15, "{v}");
    assert!(Link::Logit.log_cdf(40.0) < 0.0);
    assert!((Link::Logit.log_cdf(40.0) + 4.248_354_255_291_589e-18).abs() < 1e-30);
}

#[test]
fn probit_far_tail() {
    // log Phi(-40), from the asymptotic expansion carried to many terms
    let v = Link::Probit.log_cdf(-40.0);
    assert!((v - (-804.608_442_013_753_8)).abs() < 1e-10, "{v}");
    // continuity across the switch to the tail series: the slope there is
    // the inverse Mills ratio, |z| + 1/|z| - 2/|z|^3 + ...
    let below = Link::Probit.log_cdf(-30.000_001);
    let above = Link::Probit.log_cdf(-29.999_999);
    let slope = (above - below) / 2e-6;
    let mills = 30.0 + 1.0 / 30.0 - 2.0 / 27_000.0;
    assert!((slope - mills).abs() < 1e-4, "{slope}");
}

#[test]
fn cloglog_tails() {
    // G(z) = 1 - exp(-e^z) ~ e^z for z -> -inf
    assert_eq!(Link::Cloglog.log_cdf(-50.0), -50.0);
    // 1 - G(z) = exp(-e^z)
    let z: f64 = 3.0;
    assert!((Link::Cloglog.log_sf(z) + z.exp()).abs() < 1e-12);
    let v = Link::Cloglog.inverse(1.0 - (-1.0f64).exp()).unwrap();
    assert!(v.abs() < 1e-15, "{v}");
}

/// Separation by brute force: look for integer `w` in `[-3, 3]^3` with
/// `w . (1, x)` >= 0 on ones, <= 0 on zeros, and not all zero on the data.
fn brute_force_separable(x: &[[f64; 2]], y: &[u8]) -> bool {
    let r = -3..=3;
    for w0 in r.clone() {
        for w1 in r.clone() {
            for w2 in r.clone() {
                let s: Vec<f64> = x
                    .iter()
                    .map(|p| w0 as f64 + w1 as f64 * p[0] + w2 as f64 * p[1])
                    .collect();
                let ok = s
                    .iter()
                    .zip(y)
                    .all(|(v, &l)| if l == 1 { *v >= 0.0 } else { *v <= 0.0 });
                if ok && s.iter().any(|v| *v != 0.0) {
                    return true;
                }
            }
        }
    }
    false
}

#[test]
fn unit_square_labelings_match_brute_force() {
    let x = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut seen_overlap = false;
    for mask in 1u8..15 {
        let y: Vec<u8> = (0..4).map(|i| (mask >> i) & 1).collect();
        let ds = Dataset::from_parts(x.iter().map(|p| p.to_vec()).collect(), y.clone()).unwrap();
        let dm = extended_design(&ds, DEFAULT_RANK_TOLERANCE);
        let r = cone_overlap(&dm, ds.y(), DEFAULT_MIN_MARGIN).unwrap();
        let separable = brute_force_separable(&x, &y);
        let expected = if separable {
            OverlapVerdict::Separated
        } else {
            OverlapVerdict::Overlap
        };
        assert_eq!(r.verdict, expected, "labels {y:?}");
        seen_overlap |= !separable;
    }
    // the two XOR labelings are the only overlapping ones
    assert!(seen_overlap);
}

/// Optimum of `max c x, A x = b, x >= 0` by enumerating basic solutions.
fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let m = lp.a.len();
    let n = lp.c.len();
    let mut best: Option<f64> = None;
    let mut cols: Vec<usize> = (0..m).collect();
    loop {
        let b_mat = DMatrix::from_fn(m, m, |i, j| lp.a[i][cols[j]]);
        if b_mat.determinant().abs() > 1e-12 {
            if let Some(xb) = b_mat.lu().solve(&DVector::from_vec(lp.b.clone())) {
                if xb.iter().all(|v| *v >= -1e-12) {
                    let obj: f64 = cols.iter().zip(xb.iter()).map(|(&j, v)| lp.c[j] * v).sum();
                    best = Some(best.map_or(obj, |b: f64| b.max(obj)));
                }
            }
        }
        // next m-combination of 0..n
        let mut k = m;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if cols[k] < n - m + k {
                cols[k] += 1;
                for t in k + 1..m {
                    cols[t] = cols[t - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = SeededRng::new(2024);
    let mut optimal = 0;
    let mut infeasible = 0;
    for _ in 0..300 {
        let m = rng.int_in(1, 3);
        let n = rng.int_in(m + 1, 6);
        let mut a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.int_in(0, 8) as f64 - 4.0).collect())
            .collect();
        let mut b: Vec<f64> = (0..m).map(|_| rng.int_in(0, 8) as f64 - 4.0).collect();
        // a sum row keeps the feasible set bounded
        a.push(vec![1.0; n]);
        b.push(1.0 + rng.int_in(0, 4) as f64);
        let c: Vec<f64> = (0..n).map(|_| rng.int_in(0, 10) as f64 - 5.0).collect();
        let lp = LinearProgram { a, b, c };
        let reference = vertex_enumeration(&lp);
        match (lp.solve().unwrap(), reference) {
            (LpOutcome::Optimal { x, objective }, Some(best)) => {
                assert!(
                    (objective - best).abs() < 1e-9,
                    "{objective} vs {best} for {lp:?}"
                );
                assert!(x.iter().all(|v| *v >= -1e-12));
                optimal += 1;
            }
            (LpOutcome::Infeasible, None) => infeasible += 1,
            (got, want) => panic!("simplex {got:?}, enumeration {want:?} for {lp:?}"),
        }
    }
    assert!(
        optimal > 50 && infeasible > 10,
        "{optimal} optimal, {infeasible} infeasible"
    );
}

#[test]
fn logit_fit_matches_closed_form_two_point() {
    // two distinct x values: fitted probabilities equal the group rates,
    // x = 0: 1/4 ones, x = 1: 3/4 ones
    let ds = Dataset::from_scalar(
        &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
        &[0, 0, 0, 1, 0, 1, 1, 1],
    )
    .unwrap();
    let r = fit(&ds, &Link::Logit, &FitOptions::default()).unwrap();
    assert_eq!(r.status, FitStatus::Converged);
    let a = (1.0f64 / 3.0).ln();
    assert!((r.params.alpha - a).abs() < 1e-10);
    assert!((r.params.beta[0] - (-2.0 * a)).abs() < 1e-10);
}
