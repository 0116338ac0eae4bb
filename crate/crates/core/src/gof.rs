//! Goodness-of-fit distances: one-sample Kolmogorov–Smirnov against a
//! Gaussian, and the sup-distance between characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many samples the KS statistic is computed from a histogram.
pub const EXACT_KS_CAP: usize = 1_000_000;
pub const HISTOGRAM_BINS: usize = 4096;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn check_target(variance: f64) -> Result<f64> {
    if variance > 0.0 && variance.is_finite() {
        Ok(variance.sqrt())
    } else {
        Err(Error::invalid(format!("target variance must be positive, got {variance}")))
    }
}

/// `sup_x |F_n(x) - Φ((x - mean)/sd)|`.
pub fn ks_distance(samples: &[f64], mean: f64, variance: f64) -> Result<f64> {
    let sd = check_target(variance)?;
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { required: 1, got: 0 });
    }
    if samples.len() > EXACT_KS_CAP {
        let hist = Histogram::from_samples(samples, HISTOGRAM_BINS);
        return hist.ks_distance(mean, variance);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // Ties jump the empirical CDF by their multiplicity at once.
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let cdf = normal_cdf((xs[i] - mean) / sd);
        d = d.max((cdf - i as f64 / n).abs()).max(((j + 1) as f64 / n - cdf).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Equal-width histogram with underflow and overflow counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram { lo, hi, counts: vec![0; bins.max(1)], below: 0, above: 0 }
    }

    /// Range `mean ± 8 sd` of the data.
    pub fn from_samples(samples: &[f64], bins: usize) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let half = 8.0 * var.sqrt().max(1e-12);
        let mut h = Histogram::new(mean - half, mean + half, bins);
        for &x in samples {
            h.push(x);
        }
        h
    }

    pub fn push(&mut self, x: f64) {
        if x < self.lo {
            self.below += 1;
        } else if x >= self.hi {
            self.above += 1;
        } else {
            let w = (self.hi - self.lo) / self.counts.len() as f64;
            let k = (((x - self.lo) / w) as usize).min(self.counts.len() - 1);
            self.counts[k] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.below + self.above + self.counts.iter().sum::<u64>()
    }

    /// KS distance evaluated at the bin edges. Within a bin the true value can
    /// exceed this by at most the bin's empirical mass.
    pub fn ks_distance(&self, mean: f64, variance: f64) -> Result<f64> {
        let sd = check_target(variance)?;
        let n = self.total() as f64;
        if n == 0.0 {
            return Err(Error::InsufficientSamples { required: 1, got: 0 });
        }
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        let mut cum = self.below as f64;
        let mut d: f64 = 0.0;
        for (k, &c) in self.counts.iter().enumerate() {
            let edge = self.lo + k as f64 * w;
            d = d.max((cum / n - normal_cdf((edge - mean) / sd)).abs());
            cum += c as f64;
        }
        d = d.max((cum / n - normal_cdf((self.hi - mean) / sd)).abs());
        Ok(d)
    }
}

/// 24 points log-spaced in `[0.05, 3]`.
pub fn default_ecf_grid() -> Vec<f64> {
    let (lo, hi) = (0.05f64.ln(), 3.0f64.ln());
    (0..24).map(|i| (lo + (hi - lo) * i as f64 / 23.0).exp()).collect()
}

/// `mean_j exp(2πi t x_j)`.
pub fn empirical_cf(samples: &[f64], t: f64) -> Complex64 {
    let n = samples.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for &x in samples {
        let (s, c) = (2.0 * PI * t * x).sin_cos();
        re += c;
        im += s;
    }
    Complex64::new(re / n, im / n)
}

/// `max_{t ∈ grid} |ECF(t) - target(t)|`.
pub fn ecf_sup_distance(samples: &[f64], target: impl Fn(f64) -> Complex64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("ECF grid must be nonempty"));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { required: 1, got: 0 });
    }
    Ok(grid.iter().map(|&t| (empirical_cf(samples, t) - target(t)).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbations::PerturbationSpec;
    use crate::rng::Stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut s = Stream::new(seed, 0);
        (0..n).map(|_| shift + s.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn ks_constant_and_shifted() {
        assert!((ks_distance(&[0.0; 100], 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let xs = normals(1, 200_000, 1.0);
        let d = ks_distance(&xs, 0.0, 1.0).unwrap();
        let want = normal_cdf(0.5) - normal_cdf(-0.5);
        assert!((want - 0.3829).abs() < 1e-4);
        assert!((d - want).abs() < 0.005, "{d}");
        assert!(ks_distance(&xs, 0.0, 0.0).is_err());
    }

    #[test]
    fn ks_null_calibration() {
        // Under the null, P(D > 1.358/√n) ≈ 5%; allow 3 binomial std errors.
        let n = 10_000;
        let crit = 1.358 / (n as f64).sqrt();
        let seeds = 400;
        let rejections = (0..seeds)
            .filter(|&s| ks_distance(&normals(1000 + s, n, 0.0), 0.0, 1.0).unwrap() > crit)
            .count();
        let rate = rejections as f64 / seeds as f64;
        let se = (0.05f64 * 0.95 / seeds as f64).sqrt();
        assert!((rate - 0.05).abs() < 3.0 * se, "rejection rate {rate}");
    }

    #[test]
    fn histogram_ks_tracks_exact() {
        let xs = normals(5, 300_000, 0.2);
        let exact = ks_distance(&xs, 0.0, 1.0).unwrap();
        let h = Histogram::from_samples(&xs, HISTOGRAM_BINS);
        assert_eq!(h.total(), xs.len() as u64);
        let binned = h.ks_distance(0.0, 1.0).unwrap();
        let max_bin = *h.counts.iter().max().unwrap() as f64 / xs.len() as f64;
        assert!(binned <= exact + 1e-12 && exact <= binned + max_bin, "{binned} {exact}");
    }

    #[test]
    fn ecf_examples() {
        let zeros = vec![0.0; 50];
        assert_eq!(ecf_sup_distance(&zeros, |_| Complex64::new(1.0, 0.0), &default_ecf_grid()).unwrap(), 0.0);

        let xs = normals(9, 10_000, 0.0);
        let d = ecf_sup_distance(&xs, |t| Complex64::new((-2.0 * PI * PI * t * t).exp(), 0.0), &default_ecf_grid())
            .unwrap();
        assert!(d < 0.03, "{d}");

        // a·S_α with cf exp(-(a|t|)^α) is SymStable with γ = (a/2π)^α.
        let (alpha, a) = (1.5, 1.336);
        let spec = PerturbationSpec::sym_stable(alpha, (a / (2.0 * PI)).powf(alpha), 1).unwrap();
        let mut s = Stream::new(10, 0);
        let ys: Vec<f64> = spec.sample(10_000, &mut s).into_iter().map(|v| v[0]).collect();
        let d = ecf_sup_distance(&ys, |t| Complex64::new((-(a * t.abs()).powf(alpha)).exp(), 0.0), &default_ecf_grid())
            .unwrap();
        assert!(d < 0.03, "{d}");
        assert!(ecf_sup_distance(&ys, |_| Complex64::new(1.0, 0.0), &[]).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = default_ecf_grid();
        assert_eq!(g.len(), 24);
        assert!((g[0] - 0.05).abs() < 1e-15 && (g[23] - 3.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
