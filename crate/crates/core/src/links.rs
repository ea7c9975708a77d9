//! Inverse link functions `G` for binary regression.
//!
//! A link supplies the CDF `G`, its density `g`, and log forms that stay
//! finite far into the tails. The likelihood code only ever touches the log
//! forms and the derivatives built from them below.

use std::f64::consts::{FRAC_1_PI, PI};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Contract for an inverse link `G: R -> [0, 1]`.
///
/// Implementors must provide `G`, `1 - G`, and the log density; the log
/// forms have generic fallbacks but built-in links override them with
/// tail-stable versions.
pub trait InverseLink: Send + Sync {
    fn name(&self) -> &str;

    /// `G(z)`.
    fn cdf(&self, z: f64) -> f64;

    /// `1 - G(z)`, computed without cancellation where possible.
    fn sf(&self, z: f64) -> f64 {
        1.0 - self.cdf(z)
    }

    /// `log g(z)`, `-inf` where the density vanishes.
    fn log_density(&self, z: f64) -> f64;

    /// `g'(z) / g(z)`. Only evaluated where `g(z) > 0`.
    fn dlog_density(&self, z: f64) -> f64;

    /// Open interval on which `0 < G < 1`.
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Analytic claim that both `G` and `1 - G` are log-concave.
    fn claims_log_concave(&self) -> bool;

    fn density(&self, z: f64) -> f64 {
        self.log_density(z).exp()
    }

    /// `log G(z)`; `-inf` where `G(z) = 0`.
    fn log_cdf(&self, z: f64) -> f64 {
        let p = self.cdf(z);
        if p > 0.5 {
            (-self.sf(z)).ln_1p()
        } else {
            p.ln()
        }
    }

    /// `log(1 - G(z))`; `-inf` where `G(z) = 1`.
    fn log_sf(&self, z: f64) -> f64 {
        let p = self.cdf(z);
        if p > 0.5 {
            self.sf(z).ln()
        } else {
            (-p).ln_1p()
        }
    }

    /// `G^{-1}(p)` for `p` in (0, 1). The default brackets the root inside
    /// the support and bisects to machine resolution.
    fn inverse(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(bisect_inverse(self, p))
    }

    /// `d/dz log G(z) = g/G`.
    fn dlog_cdf(&self, z: f64) -> f64 {
        ratio(self.log_density(z), self.log_cdf(z))
    }

    /// `d^2/dz^2 log G(z) = (g/G) (g'/g - g/G)`.
    fn d2log_cdf(&self, z: f64) -> f64 {
        let r = self.dlog_cdf(z);
        if r == 0.0 {
            return 0.0;
        }
        r * (self.dlog_density(z) - r)
    }

    /// `d/dz log(1 - G(z)) = -g/(1 - G)`.
    fn dlog_sf(&self, z: f64) -> f64 {
        -ratio(self.log_density(z), self.log_sf(z))
    }

    /// `d^2/dz^2 log(1 - G(z)) = -(g/(1-G)) (g'/g + g/(1-G))`.
    fn d2log_sf(&self, z: f64) -> f64 {
        let r = ratio(self.log_density(z), self.log_sf(z));
        if r == 0.0 {
            return 0.0;
        }
        -r * (self.dlog_density(z) + r)
    }
}

/// `exp(log_num - log_den)`, taking zero density (or an impossible term) to
/// contribute nothing.
fn ratio(log_num: f64, log_den: f64) -> f64 {
    if log_num == f64::NEG_INFINITY || log_den == f64::NEG_INFINITY {
        0.0
    } else {
        (log_num - log_den).exp()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(p))
    }
}

fn bisect_inverse<L: InverseLink + ?Sized>(link: &L, p: f64) -> f64 {
    let (s_lo, s_hi) = link.support();
    let mut lo = if s_lo.is_finite() { s_lo } else { -1.0 };
    let mut hi = if s_hi.is_finite() { s_hi } else { 1.0 };
    while !s_lo.is_finite() && link.cdf(lo) > p {
        lo *= 2.0;
    }
    while !s_hi.is_finite() && link.cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if link.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (link.cdf(lo) - p).abs() <= (link.cdf(hi) - p).abs() {
        lo
    } else {
        hi
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Standard normal `log Phi(z)`.
fn log_norm_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-norm_sf(z)).ln_1p()
    } else if z > -30.0 {
        norm_cdf(z).ln()
    } else {
        // Asymptotic Mills-ratio expansion:
        // Phi(z) = phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
        let z2 = z * z;
        let mut term = 1.0;
        let mut series = 1.0;
        for k in 1..40 {
            term *= -((2 * k - 1) as f64) / z2;
            series += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        -0.5 * z2 - (-z).ln() - LN_SQRT_2PI + series.ln()
    }
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// The built-in inverse links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// `G(z) = 1 / (1 + exp(-z))`
    Logit,
    /// `G(z) = Phi(z)`
    Probit,
    /// `G(z) = 1 - exp(-exp(z))`
    Cloglog,
    /// `G(z) = arctan(z)/pi + 1/2`; not log-concave.
    Cauchit,
    /// CDF of U[0, 1].
    Uniform,
}

impl Link {
    pub const ALL: [Link; 5] = [
        Link::Logit,
        Link::Probit,
        Link::Cloglog,
        Link::Cauchit,
        Link::Uniform,
    ];

    /// Smooth links satisfying the log-concavity condition.
    pub const SMOOTH_CERTIFIED: [Link; 3] = [Link::Logit, Link::Probit, Link::Cloglog];

    pub fn as_str(&self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
            Link::Cloglog => "cloglog",
            Link::Cauchit => "cauchit",
            Link::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Link::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLink(s.to_string()))
    }
}

impl InverseLink for Link {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn cdf(&self, z: f64) -> f64 {
        match self {
            Link::Logit => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Link::Probit => norm_cdf(z),
            Link::Cloglog => -(-z.exp()).exp_m1(),
            Link::Cauchit => {
                if z < 0.0 {
                    (-1.0 / z).atan() * FRAC_1_PI
                } else {
                    0.5 + z.atan() * FRAC_1_PI
                }
            }
            Link::Uniform => z.clamp(0.0, 1.0),
        }
    }

    fn sf(&self, z: f64) -> f64 {
        match self {
            Link::Logit | Link::Probit | Link::Cauchit => self.cdf(-z),
            Link::Cloglog => (-z.exp()).exp(),
            Link::Uniform => (1.0 - z).clamp(0.0, 1.0),
        }
    }

    fn log_cdf(&self, z: f64) -> f64 {
        match self {
            Link::Logit => -softplus(-z),
            Link::Probit => log_norm_cdf(z),
            Link::Cloglog => {
                if z < -30.0 {
                    // log(1 - exp(-w)) = log w - w/2 + O(w^2), w < 1e-13
                    z - 0.5 * z.exp()
                } else {
                    (-(-z.exp()).exp_m1()).ln()
                }
            }
            Link::Cauchit => self.cdf(z).ln(),
            Link::Uniform => {
                if z <= 0.0 {
                    f64::NEG_INFINITY
                } else if z >= 1.0 {
                    0.0
                } else {
                    z.ln()
                }
            }
        }
    }

    fn log_sf(&self, z: f64) -> f64 {
        match self {
            Link::Logit => -softplus(z),
            Link::Probit => log_norm_cdf(-z),
            Link::Cloglog => -z.exp(),
            Link::Cauchit => self.cdf(-z).ln(),
            Link::Uniform => {
                if z >= 1.0 {
                    f64::NEG_INFINITY
                } else if z <= 0.0 {
                    0.0
                } else {
                    (-z).ln_1p()
                }
            }
        }
    }

    fn log_density(&self, z: f64) -> f64 {
        match self {
            Link::Logit => -softplus(-z) - softplus(z),
            Link::Probit => -0.5 * z * z - LN_SQRT_2PI,
            Link::Cloglog => z - z.exp(),
            Link::Cauchit => {
                if z.abs() > 1e150 {
                    -PI.ln() - 2.0 * z.abs().ln()
                } else {
                    -PI.ln() - (z * z).ln_1p()
                }
            }
            Link::Uniform => {
                if z > 0.0 && z < 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn dlog_density(&self, z: f64) -> f64 {
        match self {
            // 1 - 2G(z)
            Link::Logit => self.sf(z) - self.cdf(z),
            Link::Probit => -z,
            Link::Cloglog => 1.0 - z.exp(),
            Link::Cauchit => {
                if z.abs() > 1e150 {
                    -2.0 / z
                } else {
                    -2.0 * z / (1.0 + z * z)
                }
            }
            Link::Uniform => 0.0,
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Link::Uniform => (0.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn claims_log_concave(&self) -> bool {
        !matches!(self, Link::Cauchit)
    }

    fn inverse(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(match self {
            Link::Logit => p.ln() - (-p).ln_1p(),
            Link::Probit => bisect_inverse(self, p),
            Link::Cloglog => (-(-p).ln_1p()).ln(),
            Link::Cauchit => (PI * (p - 0.5)).tan(),
            Link::Uniform => p,
        })
    }

    fn dlog_cdf(&self, z: f64) -> f64 {
        match self {
            Link::Logit => self.sf(z),
            _ => ratio(self.log_density(z), self.log_cdf(z)),
        }
    }

    fn dlog_sf(&self, z: f64) -> f64 {
        match self {
            Link::Logit => -self.cdf(z),
            _ => -ratio(self.log_density(z), self.log_sf(z)),
        }
    }
}

/// Free-function form of [`InverseLink::cdf`].
pub fn eval(link: &dyn InverseLink, z: f64) -> f64 {
    link.cdf(z)
}

/// Sampling grid for [`certify_log_concavity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Midpoint-convexity violations at or below this are ignored.
    pub tolerance: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -12.0,
            hi: 12.0,
            step: 1e-2,
            tolerance: 1e-9,
        }
    }
}

impl GridSpec {
    /// Grid points, with finite support endpoints of `link` (and a few
    /// points hugging them) merged in.
    pub fn points(&self, link: &dyn InverseLink) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step).round() as usize;
        let mut pts: Vec<f64> = (0..=count)
            .map(|i| self.lo + i as f64 * self.step)
            .collect();
        let (s_lo, s_hi) = link.support();
        for end in [s_lo, s_hi] {
            if end.is_finite() {
                for k in -2..=2 {
                    pts.push(end + k as f64 * self.step);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * self.step);
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

/// Which function a refuting witness breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcavityTarget {
    /// `-log G` is not midpoint convex.
    NegLogCdf,
    /// `-log(1 - G)` is not midpoint convex.
    NegLogSf,
    /// `G` fails to strictly increase inside its support.
    StrictIncrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub target: ConcavityTarget,
    pub triple: [f64; 3],
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityCertificate {
    pub grid: Vec<f64>,
    pub max_convexity_violation_log_g: f64,
    pub max_convexity_violation_log_1m_g: f64,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

/// Midpoint test `f(z) <= (f(z-h) + f(z+h)) / 2` for `f = -log G` and
/// `f = -log(1 - G)`, with `+inf` values allowed as in extended convexity.
fn midpoint_violation(f_lo: f64, f_mid: f64, f_hi: f64) -> f64 {
    if f_lo == f64::INFINITY || f_hi == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if f_mid == f64::INFINITY {
        return f64::INFINITY;
    }
    f_mid - 0.5 * (f_lo + f_hi)
}

/// Numerically check that `G` and `1 - G` are log-concave and that `G`
/// strictly increases where `0 < G < 1`.
///
/// Triples are `(z - h, z, z + h)` over consecutive equally spaced grid
/// points. The first witness beyond tolerance (largest violation) refutes.
pub fn certify_log_concavity(link: &dyn InverseLink, spec: &GridSpec) -> ConcavityCertificate {
    let grid = spec.points(link);
    let neg_log_cdf: Vec<f64> = grid.iter().map(|&z| -link.log_cdf(z)).collect();
    let neg_log_sf: Vec<f64> = grid.iter().map(|&z| -link.log_sf(z)).collect();

    let mut max_g = f64::NEG_INFINITY;
    let mut max_1m_g = f64::NEG_INFINITY;
    let mut worst: Option<Witness> = None;
    let mut triples = 0usize;
    let consider = |w: Witness, worst: &mut Option<Witness>| {
        if w.violation > spec.tolerance && worst.map_or(true, |cur| w.violation > cur.violation) {
            *worst = Some(w);
        }
    };

    for i in 1..grid.len().saturating_sub(1) {
        let (a, b, c) = (grid[i - 1], grid[i], grid[i + 1]);
        // equal spacing only
        if ((b - a) - (c - b)).abs() > 1e-9 * spec.step {
            continue;
        }
        let interior = |k: usize| neg_log_cdf[k].is_finite() && neg_log_sf[k].is_finite();
        if !(interior(i - 1) || interior(i) || interior(i + 1)) {
            continue;
        }
        triples += 1;
        let v1 = midpoint_violation(neg_log_cdf[i - 1], neg_log_cdf[i], neg_log_cdf[i + 1]);
        let v2 = midpoint_violation(neg_log_sf[i - 1], neg_log_sf[i], neg_log_sf[i + 1]);
        max_g = max_g.max(v1);
        max_1m_g = max_1m_g.max(v2);
        consider(
            Witness {
                target: ConcavityTarget::NegLogCdf,
                triple: [a, b, c],
                violation: v1,
            },
            &mut worst,
        );
        consider(
            Witness {
                target: ConcavityTarget::NegLogSf,
                triple: [a, b, c],
                violation: v2,
            },
            &mut worst,
        );
    }

    // strict increase between neighbours that are both strictly inside (0, 1)
    if worst.is_none() {
        for i in 0..grid.len().saturating_sub(1) {
            let both_inside = (i..=i + 1).all(|k| neg_log_cdf[k] > 0.0 && neg_log_sf[k] > 0.0);
            if !both_inside {
                continue;
            }
            let increases =
                neg_log_cdf[i + 1] < neg_log_cdf[i] || neg_log_sf[i + 1] > neg_log_sf[i];
            if !increases {
                worst = Some(Witness {
                    target: ConcavityTarget::StrictIncrease,
                    triple: [grid[i], 0.5 * (grid[i] + grid[i + 1]), grid[i + 1]],
                    violation: f64::INFINITY,
                });
                break;
            }
        }
    }

    let verdict = if worst.is_some() {
        Verdict::Refuted
    } else if triples < 3 {
        Verdict::Inconclusive
    } else {
        Verdict::Certified
    };
    ConcavityCertificate {
        grid,
        max_convexity_violation_log_g: max_g,
        max_convexity_violation_log_1m_g: max_1m_g,
        verdict,
        witness: worst,
    }
}
