//! Sample statistics and goodness-of-fit helpers shared by the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::{Error, Result};

/// Monte Carlo estimate of a mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_samples: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error_mean: f64,
    /// Standard error of the sample variance, from the fourth central moment.
    pub std_error_variance: f64,
    pub seed: u64,
}

impl EnsembleStats {
    /// Summarize a finished accumulator.
    pub fn from_accumulator(acc: &Accumulator, seed: u64) -> Result<Self> {
        let n = acc.count();
        if n < 2 {
            return Err(Error::Domain("at least two samples are required".into()));
        }
        let nf = n as f64;
        let variance = acc.variance();
        let m4 = acc.central_moment4();
        let var_of_var = ((m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
        Ok(Self {
            n_samples: n,
            mean: acc.mean(),
            variance,
            std_error_mean: (variance / nf).sqrt(),
            std_error_variance: var_of_var.sqrt(),
            seed,
        })
    }

    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let mut acc = Accumulator::default();
        samples.iter().for_each(|&x| acc.push(x));
        Self::from_accumulator(&acc, seed)
    }

    /// Distance of the sample mean from `target` in standard errors.
    pub fn mean_z(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error_mean
    }

    /// Distance of the sample variance from `target` in standard errors.
    pub fn variance_z(&self, target: f64) -> f64 {
        (self.variance - target) / self.std_error_variance
    }
}

/// Streaming accumulator for the first four central moments.
///
/// Uses the pairwise update of Pébay so the result does not depend on
/// the magnitude of the mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    /// Combine two accumulators as if all samples had been pushed into one.
    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let mean = self.mean + d * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 =
            self.m3 + other.m3 + d * d2 * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        Self { n: self.n + other.n, mean, m2, m3, m4 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    /// Third central moment (biased, divided by n).
    pub fn central_moment3(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m3 / self.n as f64
        }
    }

    /// Fourth central moment (biased, divided by n).
    pub fn central_moment4(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m4 / self.n as f64
        }
    }
}

/// Outcome of a Pearson chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against expected probabilities.
///
/// `probs` must sum to one over the same bins as `observed`.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::Domain("chi-square needs matching bins (at least two)".into()));
    }
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let statistic = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = total * p;
            if e > 0.0 {
                (o as f64 - e).powi(2) / e
            } else if o > 0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    let p_value = if statistic.is_finite() { dist.sf(statistic) } else { 0.0 };
    Ok(ChiSquare { statistic, dof, p_value })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples`
/// and the standard normal.
pub fn ks_distance_normal(samples: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Total-variation distance between two probability vectors (padded with zeros).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len).map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

/// Histogram of nonnegative integer samples with an overflow bin at `bins`.
pub fn histogram(samples: impl IntoIterator<Item = u64>, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins + 1];
    for s in samples {
        counts[(s as usize).min(bins)] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_sample() {
        let s = EnsembleStats::from_samples(&[1.0, 2.0, 3.0, 4.0], 0).unwrap();
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 + 0.1 * i as f64).collect();
        let mut all = Accumulator::default();
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        for (i, &x) in xs.iter().enumerate() {
            all.push(x);
            if i < 40 {
                a.push(x)
            } else {
                b.push(x)
            }
        }
        let m = a.merge(&b);
        assert!((m.mean() - all.mean()).abs() < 1e-12);
        assert!((m.variance() - all.variance()).abs() < 1e-10);
        assert!((m.central_moment4() - all.central_moment4()).abs() < 1e-8);
    }

    #[test]
    fn fourth_moment_matches_direct() {
        let xs = [0.5, 1.5, -2.0, 3.25, 0.0, 7.0];
        let mut acc = Accumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        let mean = xs.iter().sum::<f64>() / 6.0;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / 6.0;
        assert!((acc.central_moment4() - m4).abs() < 1e-10);
    }

    #[test]
    fn too_few_samples() {
        assert!(EnsembleStats::from_samples(&[1.0], 0).is_err());
    }

    #[test]
    fn chi_square_perfect_fit() {
        let c = chi_square(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_distance_bounds() {
        assert_eq!(total_variation(&[1.0], &[0.0, 1.0]), 1.0);
        assert_eq!(total_variation(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
    }
}
