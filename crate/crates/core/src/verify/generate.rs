//! Seeded data generators.
//!
//! Randomness comes from ChaCha8 keyed by the little-endian bytes of the
//! seed (remaining key bytes zero, stream 0). Uniforms take the top 53 bits
//! of each 64-bit output and normals use Box-Muller, so the streams are
//! easy to reproduce outside Rust.

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{extended_design, Dataset, DEFAULT_RANK_TOLERANCE};
use crate::error::{Error, Result};
use crate::overlap::{cone_overlap, OverlapVerdict, DEFAULT_MIN_MARGIN};

const MAX_ATTEMPTS: usize = 1000;

pub struct SeededRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Self {
            inner: ChaCha8Rng::from_seed(key),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Integer uniform on `lo..=hi`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((self.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Decorrelated per-trial seed.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_size(n: usize, d: usize, min_extra: usize) -> Result<()> {
    if d == 0 || n < d + min_extra {
        return Err(Error::ConfigError(format!(
            "need d >= 1 and n >= d + {min_extra}, got n = {n}, d = {d}"
        )));
    }
    Ok(())
}

/// Random data with full-rank design and overlapping groups.
///
/// Predictors are standard normal; labels follow a logistic model with
/// random coefficients. Draws are rejected until the cone test reports
/// overlap.
pub fn gen_overlapping(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    check_size(n, d, 2)?;
    let mut rng = SeededRng::new(seed);
    for _ in 0..MAX_ATTEMPTS {
        let alpha = 0.5 * rng.normal();
        let beta: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let eta = alpha + xi.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
            y.push(u8::from(rng.bernoulli(logistic(eta))));
            x.push(xi);
        }
        let Ok(ds) = Dataset::from_parts(x, y) else {
            continue;
        };
        let dm = extended_design(&ds, DEFAULT_RANK_TOLERANCE);
        if !dm.rank_ok {
            continue;
        }
        if let Ok(r) = cone_overlap(&dm, ds.y(), DEFAULT_MIN_MARGIN) {
            if r.verdict == OverlapVerdict::Overlap {
                return Ok(ds);
            }
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        reason: format!("no overlapping draw for n = {n}, d = {d}"),
    })
}

/// Completely separated data: a random hyperplane splits the groups with a
/// gap between the closest points on either side.
pub fn gen_separated(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    check_size(n, d, 1)?;
    let mut rng = SeededRng::new(seed);
    for _ in 0..MAX_ATTEMPTS {
        let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if wn == 0.0 {
            continue;
        }
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.normal()).collect())
            .collect();
        let proj: Vec<f64> = x
            .iter()
            .map(|xi| xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / wn)
            .collect();
        let mut sorted = proj.clone();
        sorted.sort_by(f64::total_cmp);
        let k = rng.int_in(1, n - 1);
        if sorted[k] - sorted[k - 1] <= 1e-9 {
            continue;
        }
        let threshold = 0.5 * (sorted[k - 1] + sorted[k]);
        let y = proj.iter().map(|&p| u8::from(p > threshold)).collect();
        if let Ok(ds) = Dataset::from_parts(x, y) {
            return Ok(ds);
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        reason: format!("no separated draw for n = {n}, d = {d}"),
    })
}

/// Overlapping data shifted so that the group means coincide. Redraws (with
/// derived seeds) until the shifted design keeps full rank.
pub fn gen_balanced(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let sub = if attempt == 0 {
            seed
        } else {
            trial_seed(seed, attempt)
        };
        let ds = super::shift_dataset(&gen_overlapping(n, d, sub)?);
        if extended_design(&ds, DEFAULT_RANK_TOLERANCE).rank_ok {
            return Ok(ds);
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        reason: "shifted designs kept losing rank".into(),
    })
}

/// Class-conditional Gaussians: `y ~ Bernoulli(1/2)`, `x | y = j ~ N(mu_j, sigma)`.
pub fn gen_gaussian(
    n: usize,
    mu0: &[f64],
    mu1: &[f64],
    sigma: &[Vec<f64>],
    seed: u64,
) -> Result<Dataset> {
    let d = mu0.len();
    if d == 0 || mu1.len() != d || sigma.len() != d || sigma.iter().any(|r| r.len() != d) {
        return Err(Error::ConfigError(
            "mu0, mu1 and sigma must share one dimension d >= 1".into(),
        ));
    }
    if n < 2 {
        return Err(Error::ConfigError("need n >= 2".into()));
    }
    let cov = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::ConfigError("sigma is not positive definite".into()))?;
    let l = chol.l();
    let mut rng = SeededRng::new(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let label = rng.bernoulli(0.5);
            let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let mu = if label { mu1 } else { mu0 };
            let xi = (0..d)
                .map(|i| mu[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>())
                .collect();
            x.push(xi);
            y.push(u8::from(label));
        }
        if let Ok(ds) = Dataset::from_parts(x, y) {
            return Ok(ds);
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        reason: "one group stayed empty".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::group_stats;

    #[test]
    fn rng_is_deterministic() {
        let a: Vec<u64> = {
            let mut r = SeededRng::new(7);
            (0..5).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SeededRng::new(7);
            (0..5).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut r = SeededRng::new(8);
        assert_ne!(a[0], r.next_u64());
    }

    #[test]
    fn normal_moments() {
        let mut r = SeededRng::new(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }

    #[test]
    fn int_in_covers_range() {
        let mut r = SeededRng::new(3);
        let mut seen = [false; 5];
        for _ in 0..500 {
            seen[r.int_in(6, 10) - 6] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn overlapping_draws_overlap() {
        for s in 0..20 {
            let ds = gen_overlapping(20, 2, s).unwrap();
            let dm = extended_design(&ds, DEFAULT_RANK_TOLERANCE);
            let r = cone_overlap(&dm, ds.y(), DEFAULT_MIN_MARGIN).unwrap();
            assert_eq!(r.verdict, OverlapVerdict::Overlap);
        }
        assert_eq!(
            gen_overlapping(12, 1, 5).unwrap(),
            gen_overlapping(12, 1, 5).unwrap()
        );
    }

    #[test]
    fn separated_draws_separate() {
        for s in 0..20 {
            let ds = gen_separated(15, 2, s).unwrap();
            let dm = extended_design(&ds, DEFAULT_RANK_TOLERANCE);
            let r = cone_overlap(&dm, ds.y(), DEFAULT_MIN_MARGIN).unwrap();
            assert_eq!(r.verdict, OverlapVerdict::Separated);
        }
    }

    #[test]
    fn balanced_draws_have_equal_means() {
        for s in 0..20 {
            let ds = gen_balanced(16, 1, s).unwrap();
            assert!(group_stats(&ds).delta[0].abs() <= 1e-12);
        }
    }

    #[test]
    fn gaussian_shapes_and_errors() {
        let sigma = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let ds = gen_gaussian(50, &[0.0, 0.0], &[1.0, 0.0], &sigma, 4).unwrap();
        assert_eq!((ds.n(), ds.d()), (50, 2));
        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(
            gen_gaussian(50, &[0.0, 0.0], &[1.0, 0.0], &bad, 4),
            Err(Error::ConfigError(_))
        ));
        assert!(matches!(
            gen_overlapping(3, 2, 0),
            Err(Error::ConfigError(_))
        ));
    }
}
