//! Infinite divisibility of the Bose law.
//!
//! With `b = e^{−x}` the Bose variable `ξ` splits two ways into independent
//! parts:
//!
//! * Poisson photo-multiplets: `ξ = Σ_m m·x_m` with `x_m ~ Poisson(bᵐ/m)`.
//! * Binary photons: `ξ = Σ_s 2ˢ·u_s` with `u_s ∈ {0, 1}` and
//!   `P(u_s = 1) = b^{2ˢ}/(1 + b^{2ˢ})`.
//!
//! Both reproduce the Bose pmf, mean, variance and entropy exactly in the
//! limit of no truncation. Reports carry the truncation residuals.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{binary_entropy, bose_cf, sample_poisson, BoseGeometric};
use crate::stats::{chi_square, histogram, ChiSquare};
use crate::{Error, Result};

/// Default truncation tolerance for the component sequences.
pub const DEFAULT_TOL: f64 = 1e-14;

/// Log-probabilities below this are treated as never firing.
const LN_FLOOR: f64 = -745.0;

fn check_b(b: f64) -> Result<()> {
    if b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("b must lie in (0, 1), got {b}")))
    }
}

/// `ln b^{2ˢ}`, finite for every `s` we use.
fn ln_b_pow2(b: f64, s: u32) -> f64 {
    (s as f64).exp2() * b.ln()
}

/// `ln p1(s)` and `ln p0(s)` of the binary component `s`.
fn ln_binary_probs(b: f64, s: u32) -> (f64, f64) {
    let l = ln_b_pow2(b, s);
    if l < LN_FLOOR {
        return (f64::NEG_INFINITY, 0.0);
    }
    let ln_norm = l.exp().ln_1p();
    (l - ln_norm, -ln_norm)
}

/// Poisson rates `λ_m = bᵐ/m`, `m = 1..=cutoff_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonMultipletSet {
    pub b: f64,
    pub cutoff_m: u64,
    pub lambdas: Vec<f64>,
}

impl PoissonMultipletSet {
    /// Rate of multiplet `m` (1-based).
    pub fn lambda(&self, m: u64) -> f64 {
        self.lambdas[(m - 1) as usize]
    }

    /// Multiplet indices paired with their rates.
    pub fn components(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.lambdas.iter().enumerate().map(|(i, &l)| (i as u64 + 1, l))
    }
}

/// Binary-photon probabilities `p1(s) = b^{2ˢ}/(1+b^{2ˢ})`, `s = 0..=cutoff_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryPhotonSet {
    pub b: f64,
    pub cutoff_s: u32,
    pub p1s: Vec<f64>,
}

impl BinaryPhotonSet {
    pub fn components(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.p1s.iter().enumerate().map(|(s, &p)| (1u64 << s, p))
    }
}

/// Multiplet rates truncated at the smallest `M` with `b^{M+1}/(M+1) < tol·(1−b)`.
pub fn poisson_multiplet_params(b: f64, tol: f64) -> Result<PoissonMultipletSet> {
    check_b(b)?;
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let ln_b = b.ln();
    let ln_bound = (tol * (1.0 - b)).ln();
    let mut cutoff_m = 1u64;
    while (cutoff_m + 1) as f64 * ln_b - ((cutoff_m + 1) as f64).ln() >= ln_bound {
        cutoff_m += 1;
    }
    let lambdas = (1..=cutoff_m).map(|m| (m as f64 * ln_b).exp() / m as f64).collect();
    Ok(PoissonMultipletSet { b, cutoff_m, lambdas })
}

/// Binary probabilities truncated at the smallest `S` with `b^{2^{S+1}} < tol`.
pub fn binary_photon_params(b: f64, tol: f64) -> Result<BinaryPhotonSet> {
    check_b(b)?;
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let ln_tol = tol.ln();
    let mut cutoff_s = 0u32;
    while ln_b_pow2(b, cutoff_s + 1) >= ln_tol {
        cutoff_s += 1;
    }
    let p1s = (0..=cutoff_s).map(|s| ln_binary_probs(b, s).0.exp()).collect();
    Ok(BinaryPhotonSet { b, cutoff_s, p1s })
}

/// Largest gap between the Bose characteristic function and each factorization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfResidual {
    pub binary: f64,
    pub poisson: f64,
}

/// `max_t |φ_ξ(t) − Π_s φ_{u_s}(t)|` and `max_t |φ_ξ(t) − Π_m exp(λ_m(e^{imt}−1))|`.
pub fn cf_factorization_check(b: f64, t_grid: &[f64], tol: f64) -> Result<CfResidual> {
    let poisson = poisson_multiplet_params(b, tol)?;
    let binary = binary_photon_params(b, tol)?;
    let mut out = CfResidual { binary: 0.0, poisson: 0.0 };
    for &t in t_grid {
        let target = bose_cf(t, b)?;
        let prod_binary: Complex64 = binary
            .components()
            .map(|(w, p)| Complex64::new(1.0 - p, 0.0) + p * Complex64::new(0.0, w as f64 * t).exp())
            .product();
        let exponent: Complex64 =
            poisson.components().map(|(m, l)| l * (Complex64::new(0.0, m as f64 * t).exp() - 1.0)).sum();
        out.binary = out.binary.max((target - prod_binary).norm());
        out.poisson = out.poisson.max((target - exponent.exp()).norm());
    }
    Ok(out)
}

/// `n` evenly spaced points on `[0, 2π)`.
pub fn t_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect()
}

/// `Σ_m m·x_m` with independent `x_m ~ Poisson(λ_m)`, drawn in ascending `m`.
pub fn sample_bose_via_multiplets<R: Rng + ?Sized>(set: &PoissonMultipletSet, rng: &mut R) -> u64 {
    set.components().map(|(m, l)| m * sample_poisson(l, rng)).sum()
}

/// As [`sample_bose_via_multiplets`] with every `λ_m` split into `parts`
/// independent equal shares.
pub fn sample_bose_via_split_multiplets<R: Rng + ?Sized>(set: &PoissonMultipletSet, parts: u32, rng: &mut R) -> u64 {
    let parts = parts.max(1);
    set.components().map(|(m, l)| (0..parts).map(|_| m * sample_poisson(l / parts as f64, rng)).sum::<u64>()).sum()
}

/// `Σ_s 2ˢ·u_s` with independent binary `u_s`, drawn in ascending `s`.
pub fn sample_bose_via_binary<R: Rng + ?Sized>(set: &BinaryPhotonSet, rng: &mut R) -> u64 {
    set.components().map(|(w, p)| if rng.random::<f64>() < p { w } else { 0 }).sum()
}

/// `Π_{s: bit set} p1(s) · Π_{s: bit clear} p0(s)`, which equals `(1−b)bⁿ`.
///
/// The product runs over every bit of `n` and continues until `b^{2ˢ}`
/// drops below `1e-300`.
pub fn exact_binary_pmf(n: u64, b: f64) -> Result<f64> {
    check_b(b)?;
    let ln_stop = 1e-300f64.ln();
    let top_bit = 64 - n.leading_zeros();
    let mut ln_p = 0.0;
    let mut s = 0u32;
    while s < top_bit || ln_b_pow2(b, s) >= ln_stop {
        let (ln_p1, ln_p0) = ln_binary_probs(b, s);
        ln_p += if s < 64 && (n >> s) & 1 == 1 { ln_p1 } else { ln_p0 };
        s += 1;
    }
    Ok(ln_p.exp())
}

/// Indices of the set bits of `n`, ascending.
pub fn dyadic_expansion(n: u64) -> Vec<u32> {
    (0..64).filter(|&s| (n >> s) & 1 == 1).collect()
}

/// Per-component means and variances (erg, erg²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMoments {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl ComponentMoments {
    pub fn total_mean(&self) -> f64 {
        self.means.iter().sum()
    }

    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }
}

/// `Ē_m = hν·bᵐ` and `ΔE_m² = m·hν·Ē_m`: each multiplet fluctuates like particles.
pub fn multiplet_energy_variance(set: &PoissonMultipletSet, h_nu: f64) -> ComponentMoments {
    let means: Vec<f64> = set.components().map(|(m, l)| h_nu * m as f64 * l).collect();
    let variances = set.components().zip(&means).map(|((m, _), e)| m as f64 * h_nu * e).collect();
    ComponentMoments { means, variances }
}

/// `Ē_s = 2ˢhν·n̄_s` and `ΔE_s² = 2ˢhν·Ē_s − Ē_s²`: the wave term is negative.
pub fn binary_energy_variance(set: &BinaryPhotonSet, h_nu: f64) -> ComponentMoments {
    let means: Vec<f64> = set.components().map(|(w, p)| w as f64 * h_nu * p).collect();
    let variances = set.components().zip(&means).map(|((w, _), e)| w as f64 * h_nu * e - e * e).collect();
    ComponentMoments { means, variances }
}

/// `S_m/k = (1/m)(x̄_m − x̄_m ln x̄_m)` with `x̄_m = bᵐ`.
pub fn multiplet_entropy(set: &PoissonMultipletSet) -> Vec<f64> {
    set.components()
        .map(|(m, l)| {
            let xm = m as f64 * l;
            (xm - xm * xm.ln()) / m as f64
        })
        .collect()
}

/// Binary entropy of each component.
pub fn binary_component_entropy(set: &BinaryPhotonSet) -> Vec<f64> {
    set.p1s.iter().map(|&p| binary_entropy(p)).collect()
}

/// `Σ_m m·hν·(hν·e^{−mx})`, the photo-multiplet expansion of `(hν)²(n̄+n̄²)`.
pub fn debroglie_variance(x: f64, h_nu: f64, tol: f64) -> Result<f64> {
    let set = poisson_multiplet_params((-x).exp(), tol)?;
    Ok(set.components().map(|(m, _)| m as f64 * h_nu * h_nu * (-(m as f64) * x).exp()).sum())
}

/// Which decomposition a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    Poisson,
    Binary,
}

impl std::str::FromStr for DecompositionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(Self::Poisson),
            "binary" => Ok(Self::Binary),
            other => Err(Error::Config(format!("unknown decomposition kind `{other}`"))),
        }
    }
}

/// Mean, variance and entropy triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub mean: f64,
    pub variance: f64,
    pub entropy: f64,
}

/// Component bookkeeping of one decomposition against the Bose analytics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub kind: DecompositionKind,
    pub b: f64,
    pub h_nu: f64,
    pub tol: f64,
    /// Multiplet index `m` or dyadic weight `2ˢ` of each component.
    pub component_weights: Vec<u64>,
    pub component_parameters: Vec<f64>,
    pub component_means: Vec<f64>,
    pub component_variances: Vec<f64>,
    pub component_entropies: Vec<f64>,
    pub totals: Triple,
    pub expected: Triple,
    pub residuals: Triple,
}

/// Build a report for either decomposition at `b`, energies in units of `h_nu`.
pub fn decompose(kind: DecompositionKind, b: f64, tol: f64, h_nu: f64) -> Result<DecompositionReport> {
    let bose = BoseGeometric::from_b(b)?;
    let (weights, params, moments, entropies) = match kind {
        DecompositionKind::Poisson => {
            let set = poisson_multiplet_params(b, tol)?;
            (
                set.components().map(|c| c.0).collect::<Vec<_>>(),
                set.lambdas.clone(),
                multiplet_energy_variance(&set, h_nu),
                multiplet_entropy(&set),
            )
        }
        DecompositionKind::Binary => {
            let set = binary_photon_params(b, tol)?;
            (
                set.components().map(|c| c.0).collect(),
                set.p1s.clone(),
                binary_energy_variance(&set, h_nu),
                binary_component_entropy(&set),
            )
        }
    };
    let totals =
        Triple { mean: moments.total_mean(), variance: moments.total_variance(), entropy: entropies.iter().sum() };
    let expected =
        Triple { mean: h_nu * bose.mean(), variance: h_nu * h_nu * bose.variance(), entropy: bose.entropy() };
    let residuals = Triple {
        mean: (totals.mean - expected.mean).abs(),
        variance: (totals.variance - expected.variance).abs(),
        entropy: (totals.entropy - expected.entropy).abs(),
    };
    Ok(DecompositionReport {
        kind,
        b,
        h_nu,
        tol,
        component_weights: weights,
        component_parameters: params,
        component_means: moments.means,
        component_variances: moments.variances,
        component_entropies: entropies,
        totals,
        expected,
        residuals,
    })
}

/// Largest relative gap between the numerical `dS/dE` of each component and
/// `1/kT`, in reduced units `hν = k = 1` so that `1/kT = x`.
///
/// Components whose mean lies below `1e-200` are skipped.
pub fn thermo_identity_check(kind: DecompositionKind, x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("x must be positive".into()));
    }
    let b = (-x).exp();
    let mut worst = 0.0f64;
    let mut check = |entropy: &dyn Fn(f64) -> f64, energy: f64| {
        if energy < 1e-200 {
            return;
        }
        let h = energy * 1e-5;
        let d = (entropy(energy + h) - entropy(energy - h)) / (2.0 * h);
        worst = worst.max((d / x - 1.0).abs());
    };
    match kind {
        DecompositionKind::Poisson => {
            let set = poisson_multiplet_params(b, tol)?;
            for (m, l) in set.components() {
                let mf = m as f64;
                // S_m(E) with E = m·λ_m in units of hν.
                let s = move |e: f64| (e - e * e.ln()) / mf;
                check(&s, mf * l);
            }
        }
        DecompositionKind::Binary => {
            let set = binary_photon_params(b, tol)?;
            for (w, p) in set.components() {
                let wf = w as f64;
                let s = move |e: f64| binary_entropy(e / wf);
                check(&s, wf * p);
            }
        }
    }
    Ok(worst)
}

/// `(E/(m·hν))·ln(V/V0)`: entropy change when `E/(m·hν)` independent
/// multiplets are confined to the sub-volume `V` of `V0`.
pub fn volume_entropy_difference(m: u64, e_total: f64, v: f64, v0: f64, h_nu: f64) -> Result<f64> {
    if !(v > 0.0 && v < v0) {
        return Err(Error::Domain(format!("need 0 < V < V0, got V={v}, V0={v0}")));
    }
    if m == 0 || !(e_total > 0.0 && h_nu > 0.0) {
        return Err(Error::Domain("need m >= 1, E > 0 and h_nu > 0".into()));
    }
    Ok(e_total / (m as f64 * h_nu) * (v / v0).ln())
}

/// Chi-square of integer samples against the Bose pmf over bins `0..bins` and `≥ bins`.
pub fn chi_square_vs_bose(samples: &[u64], b: f64, bins: usize) -> Result<ChiSquare> {
    let bose = BoseGeometric::from_b(b)?;
    let counts = histogram(samples.iter().copied(), bins);
    let mut probs: Vec<f64> = (0..bins as u64).map(|n| bose.pmf(n)).collect();
    probs.push(b.powi(bins as i32));
    chi_square(&counts, &probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::bose_entropy;
    use crate::rng::stream;

    #[test]
    fn multiplet_rates() {
        let set = poisson_multiplet_params(0.5, DEFAULT_TOL).unwrap();
        for (l, e) in set.lambdas.iter().zip([0.5, 0.125, 1.0 / 24.0]) {
            assert!((l - e).abs() < 1e-16);
        }
        let n_bar: f64 = set.components().map(|(m, l)| m as f64 * l).sum();
        assert!((n_bar - 1.0).abs() < 1e-12);
        assert!(set.lambdas.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(poisson_multiplet_params(1e-9, 1e-6).unwrap().cutoff_m, 1);
        assert!(poisson_multiplet_params(1.0, 1e-6).is_err());
    }

    #[test]
    fn binary_probabilities() {
        let set = binary_photon_params(0.5, DEFAULT_TOL).unwrap();
        let expect = [1.0 / 3.0, 1.0 / 5.0, 1.0 / 17.0, 1.0 / 257.0];
        for (p, e) in set.p1s.iter().zip(expect) {
            assert!((p - e).abs() < 1e-16);
        }
        let n_bar: f64 = set.components().map(|(w, p)| w as f64 * p).sum();
        assert!((n_bar - 1.0).abs() < 1e-10);
        assert!(set.p1s.iter().all(|&p| p > 0.0 && p < 0.5));
        let wide = binary_photon_params(0.99, 1e-14).unwrap();
        let x = -(0.99f64).ln();
        let bound = ((1e14f64).ln() / x).log2().ceil() as u32;
        assert!(wide.cutoff_s <= bound, "{} vs {bound}", wide.cutoff_s);
    }

    #[test]
    fn cf_factorizations() {
        let r = cf_factorization_check(0.5, &t_grid(64), 1e-14).unwrap();
        assert!(r.binary < 1e-12 && r.poisson < 1e-12, "{r:?}");
        let r = cf_factorization_check(0.9, &t_grid(64), 1e-14).unwrap();
        assert!(r.binary < 1e-10 && r.poisson < 1e-10, "{r:?}");
        let r = cf_factorization_check(0.7, &[0.0], 1e-14).unwrap();
        assert!(r.binary < 1e-15 && r.poisson < 1e-15);
    }

    #[test]
    fn binary_pmf_examples() {
        assert!((exact_binary_pmf(2, 0.5).unwrap() - 0.125).abs() < 1e-12);
        assert!((exact_binary_pmf(0, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((exact_binary_pmf(9, 0.3).unwrap() - 0.7 * 0.3f64.powi(9)).abs() < 1e-12);
        for b in [0.1f64, 0.5, 0.9] {
            for n in 0..=64u64 {
                let exact = (1.0 - b) * b.powi(n as i32);
                assert!((exact_binary_pmf(n, b).unwrap() - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dyadic_examples() {
        assert_eq!(dyadic_expansion(9), vec![0, 3]);
        assert!(dyadic_expansion(0).is_empty());
        assert_eq!(dyadic_expansion(32), vec![5]);
    }

    #[test]
    fn multiplet_moments() {
        // The variance tail decays like m·bᵐ, so it needs a tighter cutoff than the rates.
        let set = poisson_multiplet_params(0.5, 1e-18).unwrap();
        let mm = multiplet_energy_variance(&set, 1.0);
        assert!((mm.means[0] - 0.5).abs() < 1e-16 && (mm.means[1] - 0.25).abs() < 1e-16);
        assert!((mm.means[2] - 0.125).abs() < 1e-16);
        assert!((mm.total_variance() - 2.0).abs() < 1e-12);
        assert_eq!(mm.variances[0], mm.means[0]);
    }

    #[test]
    fn binary_moments() {
        let set = binary_photon_params(0.5, DEFAULT_TOL).unwrap();
        let bm = binary_energy_variance(&set, 1.0);
        for (e, x) in bm.means.iter().zip([1.0 / 3.0, 2.0 / 5.0, 4.0 / 17.0]) {
            assert!((e - x).abs() < 1e-15);
        }
        for ((w, _), (m, v)) in set.components().zip(bm.means.iter().zip(&bm.variances)) {
            assert!(*v < w as f64 * m);
        }
        assert!((bm.total_variance() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn entropies() {
        let set = poisson_multiplet_params(0.5, DEFAULT_TOL).unwrap();
        let s = multiplet_entropy(&set);
        assert!((s[0] - (0.5 + 0.5 * std::f64::consts::LN_2)).abs() < 1e-15);
        let first50: f64 = s.iter().take(50).sum();
        assert!((first50 - 2.0 * std::f64::consts::LN_2).abs() < 1e-10);

        let set = binary_photon_params(0.5, DEFAULT_TOL).unwrap();
        let s = binary_component_entropy(&set);
        for (v, e) in s.iter().zip([0.636514, 0.500402, 0.223718]) {
            assert!((v - e).abs() < 1e-6);
        }
        let through4: f64 = s.iter().take(5).sum();
        assert!((through4 - 1.386293).abs() < 1e-5, "{through4}");
        let total: f64 = s.iter().sum();
        assert!((total - bose_entropy(1.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn thermodynamic_identity() {
        for kind in [DecompositionKind::Poisson, DecompositionKind::Binary] {
            for x in [std::f64::consts::LN_2, 0.3, 3.0] {
                let r = thermo_identity_check(kind, x, DEFAULT_TOL).unwrap();
                assert!(r < 1e-6, "{kind:?} x={x}: {r}");
            }
        }
    }

    #[test]
    fn first_multiplet_derivative_has_log_form() {
        // dS₁/dE₁ = −(k/hν) ln(E₁/hν) with k = hν = 1 and E₁ = b.
        let e1 = 0.5f64;
        let s = |e: f64| e - e * e.ln();
        let d = (s(e1 + 1e-6) - s(e1 - 1e-6)) / 2e-6;
        assert!((d + e1.ln()).abs() < 1e-8);
    }

    #[test]
    fn volume_entropy_examples() {
        let d = volume_entropy_difference(1, 3.0, 0.5, 1.0, 1.0).unwrap();
        assert!((d - 3.0 * 0.5f64.ln()).abs() < 1e-15);
        let d2 = volume_entropy_difference(2, 3.0, 0.5, 1.0, 1.0).unwrap();
        assert!((d2 - d / 2.0).abs() < 1e-15);
        assert!(volume_entropy_difference(1, 3.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn debroglie_expansion() {
        let x: f64 = 0.8;
        let n_bar = 1.0 / x.exp_m1();
        let v = debroglie_variance(x, 1.0, DEFAULT_TOL).unwrap();
        assert!((v - (n_bar + n_bar * n_bar)).abs() < 1e-10);
    }

    #[test]
    fn reports() {
        for kind in [DecompositionKind::Poisson, DecompositionKind::Binary] {
            let r = decompose(kind, 0.5, DEFAULT_TOL, 1.0).unwrap();
            assert!(r.residuals.mean < 1e-10 && r.residuals.variance < 1e-10 && r.residuals.entropy < 1e-10);
        }
    }

    #[test]
    fn small_b_binary_sampler_only_fires_first_component() {
        let set = binary_photon_params(1e-9, 1e-6).unwrap();
        let mut rng = stream(1, 0);
        assert!((0..10_000).all(|_| sample_bose_via_binary(&set, &mut rng) <= 1));
    }

    #[test]
    fn binary_paths_are_unique() {
        // Conditioning on ξ = n, the fired components are exactly the bits of n.
        let set = binary_photon_params(0.6, DEFAULT_TOL).unwrap();
        let mut rng = stream(2, 0);
        for _ in 0..20_000 {
            let fired: Vec<u32> = set
                .components()
                .enumerate()
                .filter_map(|(s, (_, p))| (rng.random::<f64>() < p).then_some(s as u32))
                .collect();
            let n: u64 = fired.iter().map(|&s| 1u64 << s).sum();
            assert_eq!(dyadic_expansion(n), fired);
        }
    }

    #[test]
    fn samplers_pass_chi_square() {
        let b = 0.5;
        let n = 200_000;
        let ps = poisson_multiplet_params(b, DEFAULT_TOL).unwrap();
        let bs = binary_photon_params(b, DEFAULT_TOL).unwrap();
        let mut rng = stream(3, 0);
        let a: Vec<u64> = (0..n).map(|_| sample_bose_via_multiplets(&ps, &mut rng)).collect();
        let c: Vec<u64> = (0..n).map(|_| sample_bose_via_binary(&bs, &mut rng)).collect();
        let d: Vec<u64> = (0..n).map(|_| sample_bose_via_split_multiplets(&ps, 2, &mut rng)).collect();
        for s in [&a, &c, &d] {
            assert!(chi_square_vs_bose(s, b, 16).unwrap().p_value > 1e-4);
        }
    }
}
