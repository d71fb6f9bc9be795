//! Occupation and energy distributions: Bose (geometric), Poisson, binary and
//! exponential, with exact moments, entropies, characteristic functions and
//! seeded samplers.
//!
//! Entropies are in units of `k`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::combinatorics::{planck_w, ratio_f64};
use crate::rng::open01;
use crate::{Error, Result};

/// Stop an infinite sum once a term drops below this fraction of the partial sum.
pub const SUM_REL_TOL: f64 = 1e-16;
/// Hard cap on the number of terms of an infinite sum.
pub const SUM_MAX_TERMS: usize = 1_000_000;

/// The Planck–Bose (geometric) occupation law `p_n = (1−b)bⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoseGeometric {
    pub b: f64,
    pub n_bar: f64,
}

impl BoseGeometric {
    pub fn from_n_bar(n_bar: f64) -> Result<Self> {
        if !(n_bar > 0.0 && n_bar.is_finite()) {
            return Err(Error::Domain(format!("n_bar must be positive, got {n_bar}")));
        }
        Ok(Self { b: n_bar / (1.0 + n_bar), n_bar })
    }

    pub fn from_b(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::Domain(format!("b must lie in (0, 1), got {b}")));
        }
        Ok(Self { b, n_bar: b / (1.0 - b) })
    }

    pub fn from_x(x: f64) -> Result<Self> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("x must be positive, got {x}")));
        }
        Ok(Self { b: (-x).exp(), n_bar: crate::spectral::mean_occupation(x)? })
    }

    pub fn ln_pmf(&self, n: u64) -> f64 {
        (-self.b).ln_1p() + n as f64 * self.b.ln()
    }

    pub fn pmf(&self, n: u64) -> f64 {
        self.ln_pmf(n).exp()
    }

    pub fn mean(&self) -> f64 {
        self.n_bar
    }

    pub fn variance(&self) -> f64 {
        self.n_bar + self.n_bar * self.n_bar
    }

    pub fn entropy(&self) -> f64 {
        bose_entropy_closed(self.n_bar)
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        geometric_cf(t, self.b)
    }

    /// Inverse-cdf draw: `P(N ≥ n) = bⁿ`, so `N = ⌊ln u / ln b⌋`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = open01(rng);
        let n = (u.ln() / self.b.ln()).floor();
        if n >= u64::MAX as f64 {
            u64::MAX
        } else {
            n as u64
        }
    }
}

/// Poisson law with rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonDist {
    pub lambda: f64,
}

impl PoissonDist {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("Poisson rate must be non-negative, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn ln_pmf(&self, n: u64) -> f64 {
        if self.lambda == 0.0 {
            return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        let nf = n as f64;
        nf * self.lambda.ln() - self.lambda - ln_gamma(nf + 1.0)
    }

    pub fn pmf(&self, n: u64) -> f64 {
        self.ln_pmf(n).exp()
    }

    pub fn mean(&self) -> f64 {
        self.lambda
    }

    pub fn variance(&self) -> f64 {
        self.lambda
    }

    /// Characteristic function of `m·X`, `exp(λ(e^{imt} − 1))`.
    pub fn scaled_cf(&self, t: f64, m: f64) -> Complex64 {
        (self.lambda * (Complex64::new(0.0, m * t).exp() - 1.0)).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_poisson(self.lambda, rng)
    }
}

/// Two-point law on `{0, weight}` with `P(weight) = p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryDist {
    pub p1: f64,
    pub weight: u64,
}

impl BinaryDist {
    pub fn new(p1: f64, weight: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::Domain(format!("p1 must lie in [0, 1], got {p1}")));
        }
        Ok(Self { p1, weight })
    }

    pub fn pmf(&self, n: u64) -> f64 {
        if n == self.weight && self.weight == 0 {
            1.0
        } else if n == self.weight {
            self.p1
        } else if n == 0 {
            1.0 - self.p1
        } else {
            0.0
        }
    }

    pub fn mean(&self) -> f64 {
        self.weight as f64 * self.p1
    }

    pub fn variance(&self) -> f64 {
        let w = self.weight as f64;
        w * w * self.p1 * (1.0 - self.p1)
    }

    pub fn entropy(&self) -> f64 {
        binary_entropy(self.p1)
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        Complex64::new(1.0 - self.p1, 0.0) + self.p1 * Complex64::new(0.0, self.weight as f64 * t).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_binary(self.p1, self.weight, rng)
    }
}

/// Exponential energy law of a classical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialEnergy {
    pub mean_energy: f64,
}

impl ExponentialEnergy {
    pub fn new(mean_energy: f64) -> Result<Self> {
        if !(mean_energy > 0.0) {
            return Err(Error::Domain("mean energy must be positive".into()));
        }
        Ok(Self { mean_energy })
    }

    pub fn pdf(&self, e: f64) -> f64 {
        if e < 0.0 {
            0.0
        } else {
            (-e / self.mean_energy).exp() / self.mean_energy
        }
    }

    pub fn variance(&self) -> f64 {
        exponential_energy_fluct(self.mean_energy)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_exponential(self.mean_energy, rng)
    }
}

/// `(1−b)bⁿ` with `b = n̄/(1+n̄)`, evaluated in log space.
pub fn bose_pmf(n: u64, n_bar: f64) -> Result<f64> {
    Ok(BoseGeometric::from_n_bar(n_bar)?.pmf(n))
}

/// Characteristic function `(1−b)/(1−be^{it})` of the Bose law.
pub fn bose_cf(t: f64, b: f64) -> Result<Complex64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("b must lie in (0, 1), got {b}")));
    }
    Ok(geometric_cf(t, b))
}

fn geometric_cf(t: f64, b: f64) -> Complex64 {
    Complex64::new(1.0 - b, 0.0) / (1.0 - b * Complex64::new(0.0, t).exp())
}

/// Oscillator entropy `(1+n̄)ln(1+n̄) − n̄ ln n̄`.
pub fn bose_entropy(n_bar: f64) -> Result<f64> {
    if !(n_bar > 0.0) {
        return Err(Error::Domain(format!("n_bar must be positive, got {n_bar}")));
    }
    Ok(bose_entropy_closed(n_bar))
}

fn bose_entropy_closed(n_bar: f64) -> f64 {
    (1.0 + n_bar) * n_bar.ln_1p() - n_bar * n_bar.ln()
}

/// `−Σ p_n ln p_n` over the Bose law, truncated per [`SUM_REL_TOL`].
pub fn bose_entropy_by_sum(n_bar: f64) -> Result<f64> {
    let d = BoseGeometric::from_n_bar(n_bar)?;
    Ok(truncated_sum(|n| {
        let lp = d.ln_pmf(n);
        -lp.exp() * lp
    }))
}

/// First two raw moments `(Σ n p_n, Σ n² p_n)` of the Bose law by truncated sums.
pub fn bose_moments_by_sum(n_bar: f64) -> Result<(f64, f64)> {
    let d = BoseGeometric::from_n_bar(n_bar)?;
    let m1 = truncated_sum(|n| n as f64 * d.pmf(n));
    let m2 = truncated_sum(|n| (n as f64).powi(2) * d.pmf(n));
    Ok((m1, m2))
}

/// Sum a non-negative series starting at `n = 0` until terms become negligible.
///
/// Zero terms are only treated as negligible once the partial sum is positive.
pub fn truncated_sum<F: Fn(u64) -> f64>(term: F) -> f64 {
    let mut sum = 0.0;
    let mut small_run = 0;
    for n in 0..SUM_MAX_TERMS as u64 {
        let t = term(n);
        sum += t;
        if sum > 0.0 && t.abs() < SUM_REL_TOL * sum.abs() {
            small_run += 1;
            // A couple of consecutive small terms guards against isolated zeros.
            if small_run >= 2 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    sum
}

/// Binary entropy `−[(1−p)ln(1−p) + p ln p]`.
pub fn binary_entropy(p: f64) -> f64 {
    let q_term = if p >= 1.0 { 0.0 } else { (1.0 - p) * (-p).ln_1p() };
    let p_term = if p <= 0.0 { 0.0 } else { p * p.ln() };
    -(q_term + p_term)
}

/// Fluctuation `kT²·dĒ/dT` by central difference with step `T·1e-5`.
pub fn thermo_variance<F: Fn(f64) -> f64>(energy_of_t: F, t: f64, k: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("T must be positive".into()));
    }
    let h = t * 1e-5;
    let (up, down) = (energy_of_t(t + h), energy_of_t(t - h));
    if !(up.is_finite() && down.is_finite()) {
        return Err(Error::Evaluation(format!("energy is not finite near T = {t}")));
    }
    Ok(k * t * t * (up - down) / (2.0 * h))
}

/// Energy variance `Ē²` of the exponential law.
pub fn exponential_energy_fluct(mean: f64) -> f64 {
    mean * mean
}

/// Inverse-cdf geometric draw with mean `n_bar`.
pub fn sample_bose<R: Rng + ?Sized>(n_bar: f64, rng: &mut R) -> Result<u64> {
    Ok(BoseGeometric::from_n_bar(n_bar)?.sample(rng))
}

/// Poisson draw: sequential inversion below `λ = 10`, PTRS rejection above.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 10.0 {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrs(lambda, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
        // Rounding can leave the cdf just short of one deep in the tail.
        if p < f64::MIN_POSITIVE && k as f64 > lambda {
            break;
        }
    }
    k
}

/// Hörmann's transformed rejection with squeeze.
fn poisson_ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `weight` with probability `p1`, else 0, from one uniform.
pub fn sample_binary<R: Rng + ?Sized>(p1: f64, weight: u64, rng: &mut R) -> u64 {
    if rng.random::<f64>() < p1 {
        weight
    } else {
        0
    }
}

/// Exponential draw `−mean·ln u`.
pub fn sample_exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    -mean * open01(rng).ln()
}

/// Exact comparison of `Binomial(N0, ratio)` with its Poisson limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialPoissonComparison {
    pub n0: u64,
    pub ratio: f64,
    pub lambda: f64,
    pub total_variation: f64,
}

/// Total-variation distance between `Binomial(N0, ratio)` and `Poisson(N0·ratio)`,
/// summed over the whole binomial support plus the Poisson tail beyond it.
pub fn binomial_to_poisson_check(n0: u64, ratio: f64) -> Result<BinomialPoissonComparison> {
    if n0 == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain("need N0 >= 1 and 0 < ratio < 1".into()));
    }
    let lambda = n0 as f64 * ratio;
    let poisson = PoissonDist::new(lambda)?;
    let nf = n0 as f64;
    let ln_p = ratio.ln();
    let ln_q = (-ratio).ln_1p();
    let mut diff = 0.0;
    let mut poisson_mass = 0.0;
    for k in 0..=n0 {
        let kf = k as f64;
        let ln_binom = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
        let pb = (ln_binom + kf * ln_p + (nf - kf) * ln_q).exp();
        let pp = poisson.pmf(k);
        poisson_mass += pp;
        diff += (pb - pp).abs();
    }
    diff += (1.0 - poisson_mass).max(0.0);
    Ok(BinomialPoissonComparison { n0, ratio, lambda, total_variation: 0.5 * diff })
}

/// Exact probability `W_{N−1,P−n}/W_{N,P}` that a chosen mode holds `n` of `P`
/// quanta shared among `N` modes, as a (numerator, denominator) pair.
///
/// Levels above `P` have probability zero.
pub fn planck_bose_counting_exact(
    n_modes: u64,
    quanta: u64,
    n: u64,
) -> Result<(num_bigint::BigUint, num_bigint::BigUint)> {
    if n_modes < 2 {
        return Err(Error::Domain("need at least two modes".into()));
    }
    let den = planck_w(n_modes, quanta)?;
    if n > quanta {
        return Ok((num_bigint::BigUint::default(), den));
    }
    Ok((planck_w(n_modes - 1, quanta - n)?, den))
}

/// [`planck_bose_counting_exact`] converted to a float.
pub fn planck_bose_from_counting(n_modes: u64, quanta: u64, n: u64) -> Result<f64> {
    let (num, den) = planck_bose_counting_exact(n_modes, quanta, n)?;
    Ok(ratio_f64(&num, &den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::EnsembleStats;

    #[test]
    fn bose_pmf_values() {
        assert_eq!(bose_pmf(0, 1.0).unwrap(), 0.5);
        assert!((bose_pmf(3, 1.0).unwrap() - 1.0 / 16.0).abs() < 1e-16);
        let s: f64 = (0..=200).map(|n| bose_pmf(n, 1.0).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cf_values() {
        assert_eq!(bose_cf(0.0, 0.5).unwrap(), Complex64::new(1.0, 0.0));
        let v = bose_cf(std::f64::consts::PI, 0.5).unwrap();
        assert!((v - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        for t in [0.3, 1.7, 4.0] {
            let direct: Complex64 =
                (0..=200).map(|n| 0.5f64.powi(n + 1) * Complex64::new(0.0, n as f64 * t).exp()).sum();
            assert!((direct - bose_cf(t, 0.5).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn entropy_routes() {
        assert!((bose_entropy(1.0).unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bose_entropy(1e-12).unwrap() < 1e-10);
        for n_bar in [0.1, 1.0, 10.0] {
            let a = bose_entropy(n_bar).unwrap();
            let b = bose_entropy_by_sum(n_bar).unwrap();
            assert!((a - b).abs() < 1e-10, "{n_bar}: {a} vs {b}");
        }
    }

    #[test]
    fn variance_identity_by_sums() {
        for n_bar in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let (m1, m2) = bose_moments_by_sum(n_bar).unwrap();
            let var = m2 - m1 * m1;
            let exact = n_bar + n_bar * n_bar;
            assert!((var - exact).abs() <= 1e-10 * exact.max(1.0), "{n_bar}: {var} vs {exact}");
        }
    }

    #[test]
    fn thermo_variance_examples() {
        let k = 1.381e-16;
        let classical = thermo_variance(|t| k * t, 300.0, k).unwrap();
        assert!((classical / (k * 300.0).powi(2) - 1.0).abs() < 1e-9);
        let h_nu = 4e-14;
        let t0 = 2000.0;
        let u1 = |t: f64| h_nu / (h_nu / (k * t)).exp_m1();
        let n_bar = 1.0 / (h_nu / (k * t0)).exp_m1();
        let exact = h_nu * h_nu * (n_bar + n_bar * n_bar);
        assert!((thermo_variance(u1, t0, k).unwrap() / exact - 1.0).abs() < 1e-6);
        assert_eq!(thermo_variance(|_| 3.0, 10.0, k).unwrap(), 0.0);
        assert!(matches!(thermo_variance(|_| f64::NAN, 10.0, k), Err(Error::Evaluation(_))));
    }

    #[test]
    fn samplers_match_moments() {
        let n = 1_000_000;
        let mut rng = stream(11, 0);
        let xs: Vec<f64> = (0..n).map(|_| sample_bose(1.0, &mut rng).unwrap() as f64).collect();
        let s = EnsembleStats::from_samples(&xs, 11).unwrap();
        assert!((s.mean - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
        assert!(s.variance_z(2.0).abs() < 4.0);

        for lambda in [0.5, 3.0, 25.0, 400.0] {
            let mut rng = stream(12, 0);
            let xs: Vec<f64> = (0..n).map(|_| sample_poisson(lambda, &mut rng) as f64).collect();
            let s = EnsembleStats::from_samples(&xs, 12).unwrap();
            assert!(s.mean_z(lambda).abs() < 4.0, "lambda {lambda} mean {}", s.mean);
            assert!(s.variance_z(lambda).abs() < 4.0, "lambda {lambda} var {}", s.variance);
        }

        let mut rng = stream(13, 0);
        let xs: Vec<f64> = (0..n).map(|_| sample_exponential(2.0, &mut rng)).collect();
        let s = EnsembleStats::from_samples(&xs, 13).unwrap();
        assert!(s.mean_z(2.0).abs() < 4.0);
        assert!(s.variance_z(exponential_energy_fluct(2.0)).abs() < 4.0);

        let mut rng = stream(14, 0);
        let xs: Vec<f64> = (0..n).map(|_| sample_binary(0.2, 4, &mut rng) as f64).collect();
        let s = EnsembleStats::from_samples(&xs, 14).unwrap();
        let d = BinaryDist::new(0.2, 4).unwrap();
        assert!(s.mean_z(d.mean()).abs() < 4.0);
        assert!(s.variance_z(d.variance()).abs() < 4.0);
    }

    #[test]
    fn samplers_are_deterministic() {
        let draw = |seed| {
            let mut rng = stream(seed, 3);
            (0..50).map(|_| sample_poisson(17.0, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn binomial_approaches_poisson() {
        let tvs: Vec<f64> = [10u64, 100, 1000, 10_000]
            .iter()
            .map(|&n0| binomial_to_poisson_check(n0, 1.0 / n0 as f64).unwrap().total_variation)
            .collect();
        assert!(tvs.windows(2).all(|w| w[1] < w[0]), "{tvs:?}");
        let degenerate = binomial_to_poisson_check(1, 1.0 - 1e-9).unwrap();
        assert!(degenerate.total_variation > 0.5);
    }

    #[test]
    fn counting_examples() {
        for n in 0..3 {
            assert!((planck_bose_from_counting(2, 2, n).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        let mut num_sum = num_bigint::BigUint::default();
        let mut den = num_bigint::BigUint::default();
        for n in 0..=7 {
            let (num, d) = planck_bose_counting_exact(5, 7, n).unwrap();
            num_sum += num;
            den = d;
        }
        assert_eq!(num_sum, den);
        assert_eq!(planck_bose_from_counting(4, 3, 5).unwrap(), 0.0);
        let max_dev = (0..=1000)
            .map(|n| (planck_bose_from_counting(1000, 1000, n).unwrap() - bose_pmf(n, 1.0).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 2e-3, "{max_dev}");
    }
}
