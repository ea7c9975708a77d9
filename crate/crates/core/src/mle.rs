//! Maximum likelihood for `Pr(Y = 1 | x) = G(alpha + x^T beta)`.
//!
//! The fit runs damped Newton on standardized predictors (centered, scaled
//! to unit max-abs per column) and maps the result back. Separation shows
//! up as a likelihood whose supremum is only approached as `|beta| -> inf`;
//! that is reported as [`FitStatus::Diverged`], never regularized away.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::data::{extended_design, Dataset, KahanSum, DEFAULT_RANK_TOLERANCE};
use crate::error::{Error, Result};
use crate::links::InverseLink;

/// Intercept and slopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl Parameters {
    pub fn zeros(d: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: vec![0.0; d],
        }
    }

    fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.beta.len() + 1,
            std::iter::once(self.alpha).chain(self.beta.iter().copied()),
        )
    }

    fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            alpha: v[0],
            beta: v.iter().skip(1).copied().collect(),
        }
    }

    /// `alpha + x^T beta`
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.alpha + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitStatus {
    Converged,
    Diverged,
    MaxIterations,
    NotUnique,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: Parameters,
    pub loglik: f64,
    /// `||score||_inf` in standardized coordinates at `params`.
    pub score_norm: f64,
    pub iterations: usize,
    pub status: FitStatus,
    /// Ratio of extreme eigenvalues of the negated standardized Hessian.
    pub hessian_condition: f64,
    /// Slopes in standardized coordinates (`beta_j * scale_j`).
    pub standardized_beta: Vec<f64>,
    /// Per-column centering used for standardization.
    pub x_center: Vec<f64>,
    /// Per-column scale used for standardization.
    pub x_scale: Vec<f64>,
    pub caveat: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Convergence threshold on `||score||_inf` (standardized).
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence threshold on `||beta||_2` (standardized).
    pub diverge_bound: f64,
    /// A Newton step below this (standardized, max-abs) counts as settled.
    pub step_tol: f64,
    /// Multi-start count for links without a log-concavity claim.
    pub starts: usize,
    /// Starting point in original coordinates; default `(G^-1(n1/n), 0)`.
    pub start: Option<Parameters>,
    pub rank_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            diverge_bound: 1e4,
            step_tol: 1e-6,
            starts: 7,
            start: None,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::ConfigError(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("tol", self.tol)?;
        positive("diverge_bound", self.diverge_bound)?;
        positive("step_tol", self.step_tol)?;
        positive("rank_tolerance", self.rank_tolerance)?;
        if self.max_iter == 0 {
            return Err(Error::ConfigError("max_iter must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(Error::ConfigError("starts must be at least 1".into()));
        }
        Ok(())
    }
}

fn log_term<L: InverseLink + ?Sized>(link: &L, eta: f64, y: u8) -> f64 {
    if y == 1 {
        link.log_cdf(eta)
    } else {
        link.log_sf(eta)
    }
}

/// `sum_i y_i log G(eta_i) + (1 - y_i) log(1 - G(eta_i))`, possibly `-inf`.
pub fn log_likelihood<L: InverseLink + ?Sized>(ds: &Dataset, link: &L, p: &Parameters) -> f64 {
    let mut acc = KahanSum::default();
    for (xi, yi) in ds.rows() {
        let t = log_term(link, p.linear_predictor(xi), yi);
        if t == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        acc.add(t);
    }
    acc.value()
}

/// Gradient of [`log_likelihood`] in `(alpha, beta)`.
pub fn score<L: InverseLink + ?Sized>(ds: &Dataset, link: &L, p: &Parameters) -> Vec<f64> {
    let mut acc = vec![KahanSum::default(); ds.d() + 1];
    for (xi, yi) in ds.rows() {
        let eta = p.linear_predictor(xi);
        let w = if yi == 1 {
            link.dlog_cdf(eta)
        } else {
            link.dlog_sf(eta)
        };
        acc[0].add(w);
        for (a, &v) in acc[1..].iter_mut().zip(xi) {
            a.add(w * v);
        }
    }
    acc.iter().map(KahanSum::value).collect()
}

/// Second derivative of [`log_likelihood`] in `(alpha, beta)`.
pub fn hessian<L: InverseLink + ?Sized>(ds: &Dataset, link: &L, p: &Parameters) -> DMatrix<f64> {
    let k = ds.d() + 1;
    let mut h = DMatrix::zeros(k, k);
    let mut xt = vec![1.0; k];
    for (xi, yi) in ds.rows() {
        let eta = p.linear_predictor(xi);
        let w = if yi == 1 {
            link.d2log_cdf(eta)
        } else {
            link.d2log_sf(eta)
        };
        if w == 0.0 {
            continue;
        }
        xt[1..].copy_from_slice(xi);
        for a in 0..k {
            for b in 0..=a {
                h[(a, b)] += w * xt[a] * xt[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    h
}

/// Column centering and max-abs scaling.
#[derive(Debug, Clone)]
struct Standardizer {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn new(ds: &Dataset) -> Self {
        let center = crate::data::overall_mean(ds);
        let scale = (0..ds.d())
            .map(|j| {
                let s = ds
                    .x()
                    .iter()
                    .map(|xi| (xi[j] - center[j]).abs())
                    .fold(0.0, f64::max);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { center, scale }
    }

    fn apply(&self, ds: &Dataset) -> Dataset {
        let x = ds
            .x()
            .iter()
            .map(|xi| {
                xi.iter()
                    .zip(self.center.iter().zip(&self.scale))
                    .map(|(v, (c, s))| (v - c) / s)
                    .collect()
            })
            .collect();
        Dataset::from_parts(x, ds.y().to_vec()).expect("standardizing keeps a valid data set")
    }

    fn to_original(&self, p: &Parameters) -> Parameters {
        let beta: Vec<f64> = p.beta.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let shift: f64 = beta.iter().zip(&self.center).map(|(b, c)| b * c).sum();
        Parameters {
            // + 0.0 folds -0.0 into 0.0
            alpha: p.alpha - shift + 0.0,
            beta: beta.into_iter().map(|b| b + 0.0).collect(),
        }
    }

    fn to_standard(&self, p: &Parameters) -> Parameters {
        let shift: f64 = p.beta.iter().zip(&self.center).map(|(b, c)| b * c).sum();
        Parameters {
            alpha: p.alpha + shift,
            beta: p.beta.iter().zip(&self.scale).map(|(b, s)| b * s).collect(),
        }
    }
}

struct Newton<'a, L: ?Sized> {
    ds: &'a Dataset,
    link: &'a L,
    opts: &'a FitOptions,
}

/// Outcome of the Newton loop in standardized coordinates.
struct RawFit {
    theta: DVector<f64>,
    loglik: f64,
    score_norm: f64,
    iterations: usize,
    status: FitStatus,
    condition: f64,
    note: Option<String>,
}

enum Probe {
    Bounded,
    /// Likelihood unchanged far out along the probe direction.
    Flat,
    /// A far point with higher likelihood.
    Escape(DVector<f64>, f64),
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn slope_norm(theta: &DVector<f64>) -> f64 {
    theta.rows(1, theta.len() - 1).norm()
}

impl<'a, L: InverseLink + ?Sized> Newton<'a, L> {
    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        log_likelihood(self.ds, self.link, &Parameters::from_vector(theta))
    }

    fn grad(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(score(self.ds, self.link, &Parameters::from_vector(theta)))
    }

    /// Newton direction on `-H` with eigenvalues floored at `1e-10 * trace`
    /// (absolute values where `-H` is indefinite). Returns the direction and
    /// the condition estimate, plus the max-abs size of the unfloored Newton
    /// step. `None` if the Hessian vanishes.
    fn direction(
        &self,
        theta: &DVector<f64>,
        g: &DVector<f64>,
    ) -> Option<(DVector<f64>, f64, f64)> {
        let neg_h = -hessian(self.ds, self.link, &Parameters::from_vector(theta));
        if neg_h.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let eig = SymmetricEigen::new(neg_h);
        let total: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
        if !(total > 0.0) {
            return None;
        }
        let floor = (1e-10 * total).max(f64::MIN_POSITIVE);
        let mut step = DVector::zeros(g.len());
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut raw = DVector::zeros(g.len());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let along = v.dot(g);
            lo = lo.min(lam);
            hi = hi.max(lam);
            step += v * (along / lam.abs().max(floor));
            if along != 0.0 {
                raw += v * (along / lam.abs());
            }
        }
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        Some((step, condition, inf_norm(&raw)))
    }

    /// Check a stationary point for a recession direction: take a long
    /// step both ways along the weakest-curvature eigenvector of `-H`. At a
    /// finite strict maximum both moves lose likelihood. In a double
    /// exponential tail the score and curvature vanish together, so a
    /// shrinking Newton step alone cannot tell the two cases apart.
    fn probe(&self, theta: &DVector<f64>, ll: f64) -> Probe {
        let neg_h = -hessian(self.ds, self.link, &Parameters::from_vector(theta));
        let eig = SymmetricEigen::new(neg_h);
        let k = eig.eigenvalues.imin();
        let v = eig.eigenvectors.column(k).into_owned();
        let reach = 1.0 + theta.norm();
        let resolution = 1e-12 * (1.0 + ll.abs());
        let mut best: Option<(DVector<f64>, f64)> = None;
        for sign in [1.0, -1.0] {
            let trial = theta + &v * (sign * reach);
            let t_ll = self.loglik(&trial);
            if t_ll.is_finite()
                && t_ll >= ll - resolution
                && best.as_ref().map_or(true, |b| t_ll > b.1)
            {
                best = Some((trial, t_ll));
            }
        }
        match best {
            None => Probe::Bounded,
            Some((t, t_ll)) if t_ll > ll + resolution => Probe::Escape(t, t_ll),
            Some(_) => Probe::Flat,
        }
    }

    fn run(&self, start: DVector<f64>) -> RawFit {
        let opts = self.opts;
        let mut theta = start;
        let mut ll = self.loglik(&theta);
        let mut condition = f64::NAN;
        let mut flat_steps = 0usize;
        let finish = |theta: DVector<f64>,
                      ll: f64,
                      g: f64,
                      it: usize,
                      status: FitStatus,
                      condition: f64,
                      note: Option<String>| RawFit {
            theta,
            loglik: ll,
            score_norm: g,
            iterations: it,
            status,
            condition,
            note,
        };
        if !ll.is_finite() {
            let g = inf_norm(&self.grad(&theta));
            return finish(
                theta,
                ll,
                g,
                0,
                FitStatus::MaxIterations,
                condition,
                Some("log likelihood is -inf at the starting point".into()),
            );
        }

        for it in 0..opts.max_iter {
            let g = self.grad(&theta);
            let gnorm = inf_norm(&g);
            let Some((step, cond, raw_step)) = self.direction(&theta, &g) else {
                // No curvature left: every fitted probability is saturated.
                let status = if gnorm <= opts.tol {
                    FitStatus::Diverged
                } else {
                    FitStatus::MaxIterations
                };
                return finish(theta, ll, gnorm, it, status, f64::INFINITY, None);
            };
            condition = cond;
            if gnorm <= opts.tol {
                if raw_step <= opts.step_tol {
                    match self.probe(&theta, ll) {
                        Probe::Bounded => {
                            return finish(
                                theta,
                                ll,
                                gnorm,
                                it,
                                FitStatus::Converged,
                                condition,
                                None,
                            )
                        }
                        Probe::Flat => {
                            return finish(
                                theta,
                                ll,
                                gnorm,
                                it,
                                FitStatus::Diverged,
                                condition,
                                None,
                            )
                        }
                        Probe::Escape(t, t_ll) => {
                            theta = t;
                            ll = t_ll;
                            flat_steps = 0;
                            if slope_norm(&theta) > opts.diverge_bound {
                                let g = inf_norm(&self.grad(&theta));
                                return finish(
                                    theta,
                                    ll,
                                    g,
                                    it + 1,
                                    FitStatus::Diverged,
                                    condition,
                                    None,
                                );
                            }
                            continue;
                        }
                    }
                }
                // Stationary to tolerance yet Newton still points far away:
                // either a flat but finite optimum (steps shrink fast) or a
                // supremum at infinity (steps stay put).
                flat_steps += 1;
                if flat_steps > 8 {
                    return finish(theta, ll, gnorm, it, FitStatus::Diverged, condition, None);
                }
            } else {
                flat_steps = 0;
            }

            let slope = g.dot(&step);
            let mut accepted = None;
            let mut lambda = 1.0;
            for _ in 0..=50 {
                let trial = &theta + &step * lambda;
                let trial_ll = self.loglik(&trial);
                if trial_ll.is_finite() && trial_ll >= ll + 1e-4 * lambda * slope {
                    accepted = Some((trial, trial_ll));
                    break;
                }
                // Gain below the resolution of ll: accept if the score shrinks.
                if lambda == 1.0
                    && trial_ll.is_finite()
                    && (trial_ll - ll).abs() <= 1e-12 * (1.0 + ll.abs())
                    && inf_norm(&self.grad(&trial)) < gnorm
                {
                    accepted = Some((trial, trial_ll));
                    break;
                }
                lambda *= 0.5;
            }
            let Some((mut next, mut next_ll)) = accepted else {
                let status = if gnorm <= opts.tol {
                    if flat_steps == 0 && matches!(self.probe(&theta, ll), Probe::Bounded) {
                        FitStatus::Converged
                    } else {
                        FitStatus::Diverged
                    }
                } else {
                    FitStatus::MaxIterations
                };
                let note =
                    (status == FitStatus::MaxIterations).then(|| "line search stalled".to_string());
                return finish(theta, ll, gnorm, it, status, condition, note);
            };

            // Full step accepted: keep doubling while the likelihood still rises by
            // more than its resolution.
            if lambda == 1.0 {
                let mut mult = 2.0;
                for _ in 0..60 {
                    let trial = &theta + &step * mult;
                    let trial_ll = self.loglik(&trial);
                    if !(trial_ll > next_ll + 1e-12 * (1.0 + next_ll.abs())) {
                        break;
                    }
                    next = trial;
                    next_ll = trial_ll;
                    if slope_norm(&next) > opts.diverge_bound {
                        break;
                    }
                    mult *= 2.0;
                }
            }

            theta = next;
            ll = next_ll;
            if slope_norm(&theta) > opts.diverge_bound {
                let g = inf_norm(&self.grad(&theta));
                return finish(theta, ll, g, it + 1, FitStatus::Diverged, condition, None);
            }
        }
        let g = inf_norm(&self.grad(&theta));
        let status = if g <= opts.tol && flat_steps == 0 {
            FitStatus::Converged
        } else {
            FitStatus::MaxIterations
        };
        finish(theta, ll, g, opts.max_iter, status, condition, None)
    }
}

/// Fit the binary regression by damped Newton.
///
/// Rank-deficient designs still run (the floored Newton metric handles the
/// null directions) but are reported as [`FitStatus::NotUnique`]. Links
/// without a log-concavity claim get a multi-start along the standardized
/// mean-difference direction and return the best local optimum.
pub fn fit<L: InverseLink + ?Sized>(
    ds: &Dataset,
    link: &L,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let rank_ok = extended_design(ds, opts.rank_tolerance).rank_ok;
    let std = Standardizer::new(ds);
    let sds = std.apply(ds);
    let newton = Newton {
        ds: &sds,
        link,
        opts,
    };

    let base = match &opts.start {
        Some(p) => {
            if p.beta.len() != ds.d() {
                return Err(Error::ConfigError(format!(
                    "start has {} slopes, data has d = {}",
                    p.beta.len(),
                    ds.d()
                )));
            }
            std.to_standard(p)
        }
        None => Parameters {
            alpha: link.inverse(ds.n1() as f64 / ds.n() as f64)?,
            beta: vec![0.0; ds.d()],
        },
    };

    let mut raw = if link.claims_log_concave() {
        newton.run(base.to_vector())
    } else {
        let gs = crate::data::group_stats(&sds);
        let norm = gs.delta_norm();
        let dir: Vec<f64> = if norm > 0.0 {
            gs.delta.iter().map(|v| v / norm).collect()
        } else {
            let mut e = vec![0.0; ds.d()];
            e[0] = 1.0;
            e
        };
        let mults = (0..opts.starts).map(|k| {
            if k == 0 {
                0.0
            } else {
                let mag = 0.5 * 3f64.powi(((k - 1) / 2) as i32);
                if k % 2 == 1 {
                    mag
                } else {
                    -mag
                }
            }
        });
        let mut best: Option<RawFit> = None;
        for m in mults {
            let mut start = base.to_vector();
            for (j, v) in dir.iter().enumerate() {
                start[j + 1] += m * v;
            }
            let r = newton.run(start);
            let better = match &best {
                None => true,
                Some(b) => {
                    let rank = |s: FitStatus| u8::from(s == FitStatus::Converged);
                    (rank(r.status), r.loglik) > (rank(b.status), b.loglik)
                }
            };
            if better {
                best = Some(r);
            }
        }
        let mut b = best.expect("at least one start");
        b.note = Some(format!(
            "link {} is not log-concave: best local optimum of {} starts",
            link.name(),
            opts.starts
        ));
        b
    };

    if !rank_ok {
        raw.status = FitStatus::NotUnique;
        raw.note
            .get_or_insert_with(|| "design matrix is rank deficient".into());
    }
    let sp = Parameters::from_vector(&raw.theta);
    let params = std.to_original(&sp);
    Ok(FitResult {
        loglik: raw.loglik,
        score_norm: raw.score_norm,
        iterations: raw.iterations,
        status: raw.status,
        hessian_condition: raw.condition,
        standardized_beta: sp.beta,
        x_center: std.center,
        x_scale: std.scale,
        caveat: raw.note,
        params,
    })
}
