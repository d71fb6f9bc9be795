//! The two-term energy fluctuation of black-body radiation.
//!
//! For a band of `M` modes holding mean energy `Ē = M·hν·n̄`, the variance is
//! `hν·Ē + Ē²/M`: a particle term and a wave term. This module computes it
//! along independent routes (closed form, `kT²·dĒ/dT`, curvature of the
//! entropy, variance of the occupation law), for the momentum of a mirror in
//! the radiation, and from the A/B transition-rate products.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::distributions::{bose_moments_by_sum, sample_poisson, thermo_variance};
use crate::rng::SimRng;
use crate::spectral::{mean_occupation, planck_density, PhysicalConstants, SpectralBand};
use crate::stats::{Accumulator, EnsembleStats};
use crate::{Error, ModePoint, Result};

/// Which radiation law to use for the band energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    #[default]
    Planck,
    /// Planck with the quadratic term of the entropy curvature dropped:
    /// `n̄ = e^{−x}` and no wave fluctuation.
    Wien,
}

/// Variance of the band energy split into its two terms (erg²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationBudget {
    pub nu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub x: f64,
    pub n_bar: f64,
    pub mode_count: f64,
    pub mean_energy: f64,
    pub particle_term: f64,
    pub wave_term: f64,
    pub total: f64,
}

impl FluctuationBudget {
    /// `particle_term / wave_term`.
    pub fn ratio(&self) -> f64 {
        self.particle_term / self.wave_term
    }
}

/// `hν·Ē + Ē²/M` with `Ē = M·hν·n̄`.
pub fn einstein_budget(band: &SpectralBand, t: f64, consts: &PhysicalConstants) -> Result<FluctuationBudget> {
    budget_for_law(band, t, consts, Law::Planck)
}

pub fn budget_for_law(band: &SpectralBand, t: f64, consts: &PhysicalConstants, law: Law) -> Result<FluctuationBudget> {
    let p = ModePoint::new(band.nu, t, consts)?;
    let h_nu = consts.h * band.nu;
    let m = band.mode_count;
    let (n_bar, wave) = match law {
        Law::Planck => (p.n_bar, true),
        Law::Wien => (p.b, false),
    };
    let mean_energy = m * h_nu * n_bar;
    let particle_term = h_nu * mean_energy;
    let wave_term = if wave { mean_energy * mean_energy / m } else { 0.0 };
    Ok(FluctuationBudget {
        nu: band.nu,
        t,
        x: p.x,
        n_bar,
        mode_count: m,
        mean_energy,
        particle_term,
        wave_term,
        total: particle_term + wave_term,
    })
}

/// Relative fluctuation terms `(1/(n̄·M), 1/M)` of `ΔE²/Ē²`.
pub fn relative_budget(band: &SpectralBand, t: f64, consts: &PhysicalConstants) -> Result<(f64, f64)> {
    let p = ModePoint::new(band.nu, t, consts)?;
    let m = band.mode_count;
    Ok((1.0 / (p.n_bar * m), 1.0 / m))
}

/// `M·kT²·dŪ/dT` with the single-oscillator energy `Ū(T) = hν/(e^{hν/kT}−1)`.
pub fn thermodynamic_variance(band: &SpectralBand, t: f64, consts: &PhysicalConstants) -> Result<f64> {
    let h_nu = consts.h * band.nu;
    let energy = |temp: f64| {
        let m = band.mode_count;
        m * h_nu * mean_occupation(h_nu / (consts.k * temp)).unwrap_or(f64::NAN)
    };
    thermo_variance(energy, t, consts.k)
}

/// Band entropy `σ(η)` in erg/grad at band energy `η`.
///
/// Its slope obeys `1/T = (k/hν)·ln(1 + hν·M/η)`; under [`Law::Wien`] the
/// slope is `(k/hν)·ln(hν·M/η)`.
pub fn band_entropy(eta: f64, h_nu: f64, modes: f64, k: f64, law: Law) -> f64 {
    let u = eta / (modes * h_nu);
    match law {
        Law::Planck => k * modes * ((1.0 + u) * u.ln_1p() - u * u.ln()),
        Law::Wien => k * modes * (u - u * u.ln()),
    }
}

/// `−k/σ''(η₀)`, with `σ''` from a central second difference at the
/// equilibrium band energy.
pub fn entropy_expansion_variance(band: &SpectralBand, t: f64, consts: &PhysicalConstants, law: Law) -> Result<f64> {
    let eta0 = budget_for_law(band, t, consts, law)?.mean_energy;
    let h_nu = consts.h * band.nu;
    let sigma = |eta: f64| band_entropy(eta, h_nu, band.mode_count, consts.k, law);
    let h = eta0 * 1e-4;
    let curvature = (sigma(eta0 + h) - 2.0 * sigma(eta0) + sigma(eta0 - h)) / (h * h);
    if !(curvature < 0.0) {
        return Err(Error::Curvature(curvature));
    }
    Ok(-consts.k / curvature)
}

/// `M·(hν)²·Var(n)` with the Bose variance from truncated sums over the pmf.
pub fn distribution_variance(band: &SpectralBand, t: f64, consts: &PhysicalConstants) -> Result<f64> {
    let p = ModePoint::new(band.nu, t, consts)?;
    let (m1, m2) = bose_moments_by_sum(p.n_bar)?;
    let h_nu = consts.h * band.nu;
    Ok(band.mode_count * h_nu * h_nu * (m2 - m1 * m1))
}

/// The band variance along four independent routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourRoutes {
    pub closed_form: f64,
    pub thermodynamic: f64,
    pub entropy_curvature: f64,
    pub distribution: f64,
    pub max_pairwise_relative: f64,
}

pub fn four_routes(band: &SpectralBand, t: f64, consts: &PhysicalConstants) -> Result<FourRoutes> {
    let values = [
        einstein_budget(band, t, consts)?.total,
        thermodynamic_variance(band, t, consts)?,
        entropy_expansion_variance(band, t, consts, Law::Planck)?,
        distribution_variance(band, t, consts)?,
    ];
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in i + 1..4 {
            worst = worst.max((values[i] - values[j]).abs() / values[i].abs().max(values[j].abs()));
        }
    }
    Ok(FourRoutes {
        closed_form: values[0],
        thermodynamic: values[1],
        entropy_curvature: values[2],
        distribution: values[3],
        max_pairwise_relative: worst,
    })
}

/// A band of `modes` modes at `ν = 6·10¹⁴` whose temperature gives `x`.
pub fn band_at_x(x: f64, modes: f64, consts: &PhysicalConstants) -> Result<(SpectralBand, f64)> {
    let nu = 6e14;
    let t = consts.h * nu / (consts.k * x);
    Ok((SpectralBand::with_modes(nu, 1e-3, modes, consts)?, t))
}

/// Monte Carlo energy variance of `hν·N` with `N ~ Poisson(mean_quanta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParticleCheck {
    pub stats: EnsembleStats,
    /// `hν·Ē`.
    pub analytic: f64,
}

pub fn poisson_energy_stats(mean_quanta: f64, h_nu: f64, samples: u64, seed: u64) -> Result<PoissonParticleCheck> {
    if !(mean_quanta >= 0.0 && h_nu > 0.0) {
        return Err(Error::Domain("need mean_quanta >= 0 and h_nu > 0".into()));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut acc = Accumulator::default();
    for _ in 0..samples {
        acc.push(h_nu * sample_poisson(mean_quanta, &mut rng) as f64);
    }
    Ok(PoissonParticleCheck {
        stats: EnsembleStats::from_accumulator(&acc, seed)?,
        analytic: h_nu * h_nu * mean_quanta,
    })
}

/// Poisson energy statistics of the band under the chosen law's mean energy.
pub fn poisson_particle_variance(
    band: &SpectralBand,
    t: f64,
    consts: &PhysicalConstants,
    law: Law,
    samples: u64,
    seed: u64,
) -> Result<PoissonParticleCheck> {
    let budget = budget_for_law(band, t, consts, law)?;
    let h_nu = consts.h * band.nu;
    poisson_energy_stats(budget.mean_energy / h_nu, h_nu, samples, seed)
}

/// Spectral density fed to the mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorDensity {
    #[default]
    Planck,
    RayleighJeans,
}

/// A mirror of area `f` exposed for time `τ` to radiation in `band` at `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorSetup {
    pub area_f: f64,
    pub tau: f64,
    pub band: SpectralBand,
    #[serde(rename = "T")]
    pub t: f64,
}

impl MirrorSetup {
    pub fn new(area_f: f64, tau: f64, band: SpectralBand, t: f64) -> Result<Self> {
        if !(area_f > 0.0 && tau > 0.0 && t > 0.0) {
            return Err(Error::Domain("mirror area, time and temperature must be positive".into()));
        }
        Ok(Self { area_f, tau, band, t })
    }
}

/// Momentum fluctuation of the mirror, by the friction route and in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorFluctuation {
    pub x: f64,
    /// `c²Δ̄²` from `Δ̄²/τ = 2kT·P`, `P = (3/2c)[ρ − (ν/3)dρ/dν]·f·dν`.
    pub friction_route: f64,
    /// `[hνρ + c³ρ²/8πν²]·f·c·τ·dν`.
    pub closed_form: f64,
    pub particle_term: f64,
    pub wave_term: f64,
    pub relative_gap: f64,
    /// Energy variance `ε̄²` of the volume `v = f·c·τ`.
    pub energy_form: f64,
    /// Relative error of the numerical `dρ/dν` against its closed form.
    pub derivative_error: f64,
}

fn density(law: MirrorDensity, nu: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    match law {
        MirrorDensity::Planck => planck_density(nu, t, consts).unwrap_or(f64::NAN),
        MirrorDensity::RayleighJeans => consts.mode_density(nu) * consts.k * t,
    }
}

fn density_derivative_exact(law: MirrorDensity, nu: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    let rho = density(law, nu, t, consts);
    match law {
        MirrorDensity::Planck => {
            let x = consts.x(nu, t);
            rho * (3.0 - x / (-(-x).exp_m1())) / nu
        }
        MirrorDensity::RayleighJeans => 2.0 * rho / nu,
    }
}

pub fn mirror_momentum_fluct(
    setup: &MirrorSetup,
    consts: &PhysicalConstants,
    law: MirrorDensity,
) -> Result<MirrorFluctuation> {
    let nu = setup.band.nu;
    let d_nu = setup.band.d_nu;
    let t = setup.t;
    let c = consts.c;
    let rho = density(law, nu, t, consts);
    let step = nu * 1e-6;
    let d_rho = (density(law, nu + step, t, consts) - density(law, nu - step, t, consts)) / (2.0 * step);
    let d_exact = density_derivative_exact(law, nu, t, consts);
    let friction = 3.0 / (2.0 * c) * (rho - nu / 3.0 * d_rho) * setup.area_f * d_nu;
    let delta_sq = 2.0 * consts.k * t * friction * setup.tau;
    let friction_route = c * c * delta_sq;
    let h_nu = consts.h * nu;
    let wave_coeff = c.powi(3) / (8.0 * PI * nu * nu);
    let scale = setup.area_f * c * setup.tau * d_nu;
    let particle_term = h_nu * rho * scale;
    let wave_term = wave_coeff * rho * rho * scale;
    let closed_form = particle_term + wave_term;
    let v = setup.area_f * c * setup.tau;
    let energy_form = (h_nu * rho + wave_coeff * rho * rho) * v * d_nu;
    Ok(MirrorFluctuation {
        x: consts.x(nu, t),
        friction_route,
        closed_form,
        particle_term,
        wave_term,
        relative_gap: (friction_route - closed_form).abs() / closed_form,
        energy_form,
        derivative_error: (d_rho - d_exact).abs() / d_exact.abs(),
    })
}

/// A narrow band around wavelength `lambda_cm` for the mirror example.
pub fn mirror_setup_at_wavelength(lambda_cm: f64, t: f64, consts: &PhysicalConstants) -> Result<MirrorSetup> {
    let nu = consts.c / lambda_cm;
    let band = SpectralBand::new(nu, nu * 1e-3, 1.0, consts)?;
    MirrorSetup::new(1.0, 1e-9, band, t)
}

/// Products of the transition rates and the identity they satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmekalRates {
    /// `A = (8πhν³/c³)·B`.
    pub a_coeff: f64,
    pub spontaneous_product: f64,
    pub induced_product: f64,
    /// `hν·u`.
    pub particle_brace: f64,
    /// `(c³/8πν²)·u²`.
    pub wave_brace: f64,
    pub identity_residual: f64,
}

/// `B·u·(A + B·u)` against `B²·(8πν²/c³)·{hν·u + (c³/8πν²)·u²}`.
pub fn smekal_rate_decomposition(u: f64, nu: f64, consts: &PhysicalConstants, b_coeff: f64) -> Result<SmekalRates> {
    if !(u >= 0.0 && b_coeff > 0.0 && nu > 0.0) {
        return Err(Error::Domain("need u >= 0, nu > 0 and B > 0".into()));
    }
    let z = consts.mode_density(nu);
    let a_coeff = 8.0 * PI * consts.h * nu.powi(3) / consts.c.powi(3) * b_coeff;
    let spontaneous_product = b_coeff * u * a_coeff;
    let induced_product = b_coeff * u * b_coeff * u;
    let particle_brace = consts.h * nu * u;
    let wave_brace = u * u / z;
    let lhs = spontaneous_product + induced_product;
    let rhs = b_coeff * b_coeff * z * (particle_brace + wave_brace);
    let identity_residual = if lhs == 0.0 { rhs.abs() } else { (lhs - rhs).abs() / lhs.abs() };
    Ok(SmekalRates { a_coeff, spontaneous_product, induced_product, particle_brace, wave_brace, identity_residual })
}

/// Einstein's and Ehrenfest's forms for a sub-volume `v = V_ratio·V`.
///
/// The band describes the sub-volume. Ehrenfest's particle term carries
/// the factor `v/V`; the wave terms coincide.
pub fn ehrenfest_vs_einstein_forms(
    band: &SpectralBand,
    t: f64,
    v_ratio: f64,
    consts: &PhysicalConstants,
) -> Result<(FluctuationBudget, FluctuationBudget)> {
    if !(v_ratio > 0.0 && v_ratio <= 1.0) {
        return Err(Error::Domain(format!("V_ratio must lie in (0, 1], got {v_ratio}")));
    }
    let einstein = einstein_budget(band, t, consts)?;
    let mut ehrenfest = einstein;
    ehrenfest.particle_term *= v_ratio;
    ehrenfest.total = ehrenfest.particle_term + ehrenfest.wave_term;
    Ok((einstein, ehrenfest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn crossover_at_ln2() {
        let (band, t) = band_at_x(std::f64::consts::LN_2, 100.0, &c()).unwrap();
        let b = einstein_budget(&band, t, &c()).unwrap();
        assert!((b.particle_term / b.wave_term - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wien_dominance_at_x_40() {
        let (band, t) = band_at_x(40.0, 10.0, &c()).unwrap();
        let b = einstein_budget(&band, t, &c()).unwrap();
        assert!((b.ratio() / 40f64.exp_m1() - 1.0).abs() < 1e-12);
        assert!((b.ratio() / 2.35e17 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn total_matches_single_mode_form() {
        let (band, t) = band_at_x(1.3, 7.0, &c()).unwrap();
        let b = einstein_budget(&band, t, &c()).unwrap();
        let h_nu = c().h * band.nu;
        let exact = band.mode_count * h_nu * h_nu * (b.n_bar + b.n_bar * b.n_bar);
        assert!((b.total / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_terms() {
        let (band, t) = band_at_x(std::f64::consts::LN_2, 50.0, &c()).unwrap();
        let (p, w) = relative_budget(&band, t, &c()).unwrap();
        assert!((p / w - 1.0).abs() < 1e-12);
        let b = einstein_budget(&band, t, &c()).unwrap();
        assert!((p * b.mean_energy.powi(2) / b.particle_term - 1.0).abs() < 1e-12);
        assert!((w * b.mean_energy.powi(2) / b.wave_term - 1.0).abs() < 1e-12);
        let (band4, _) = band_at_x(std::f64::consts::LN_2, 200.0, &c()).unwrap();
        let (p4, w4) = relative_budget(&band4, t, &c()).unwrap();
        assert!((p / p4 - 4.0).abs() < 1e-10 && (w / w4 - 4.0).abs() < 1e-10);
    }

    #[test]
    fn four_routes_agree() {
        for x in [0.1, std::f64::consts::LN_2, 1.0, 5.0, 20.0] {
            for m in [1.0, 10.0, 1000.0] {
                let (band, t) = band_at_x(x, m, &c()).unwrap();
                let r = four_routes(&band, t, &c()).unwrap();
                assert!(r.max_pairwise_relative < 1e-5, "x={x} m={m}: {r:?}");
            }
        }
    }

    #[test]
    fn wien_curvature_drops_wave_term() {
        let (band, t) = band_at_x(1.0, 100.0, &c()).unwrap();
        let v = entropy_expansion_variance(&band, t, &c(), Law::Wien).unwrap();
        let b = budget_for_law(&band, t, &c(), Law::Wien).unwrap();
        assert_eq!(b.wave_term, 0.0);
        assert!((v / b.particle_term - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_mode_entropy_route() {
        let (band, t) = band_at_x(1.0, 1.0, &c()).unwrap();
        let v = entropy_expansion_variance(&band, t, &c(), Law::Planck).unwrap();
        let b = einstein_budget(&band, t, &c()).unwrap();
        let h_nu = c().h * band.nu;
        let laue = h_nu * b.mean_energy + b.mean_energy.powi(2);
        assert!((v / laue - 1.0).abs() < 1e-5);
    }

    #[test]
    fn wave_fraction_decreases_with_x() {
        let fractions: Vec<f64> = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|&x| {
                let (band, t) = band_at_x(x, 10.0, &c()).unwrap();
                let b = einstein_budget(&band, t, &c()).unwrap();
                b.wave_term / b.total
            })
            .collect();
        assert!(fractions.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn poisson_particle_mc() {
        let r = poisson_energy_stats(10.0, 1.0, 1_000_000, 5).unwrap();
        assert!(r.stats.variance_z(10.0).abs() < 4.0);
        let zero = poisson_energy_stats(0.0, 1.0, 1000, 5).unwrap();
        assert_eq!(zero.stats.variance, 0.0);
    }

    #[test]
    fn mirror_routes_agree() {
        let setup = mirror_setup_at_wavelength(5e-5, 1700.0, &c()).unwrap();
        let m = mirror_momentum_fluct(&setup, &c(), MirrorDensity::Planck).unwrap();
        assert!(m.relative_gap < 1e-4, "{m:?}");
        assert!((m.closed_form / m.energy_form - 1.0).abs() < 1e-12);
        let ratio = m.particle_term / m.wave_term;
        assert!((ratio / m.x.exp_m1() - 1.0).abs() < 1e-10);
        assert!((1e7..1e8).contains(&ratio), "{ratio}");
        assert!(m.derivative_error < 1e-6);
    }

    #[test]
    fn mirror_with_rayleigh_jeans_is_wave_only() {
        let setup = mirror_setup_at_wavelength(5e-2, 1700.0, &c()).unwrap();
        let m = mirror_momentum_fluct(&setup, &c(), MirrorDensity::RayleighJeans).unwrap();
        assert!((m.friction_route / m.wave_term - 1.0).abs() < 1e-6);
        assert!(m.closed_form > m.friction_route);
    }

    #[test]
    fn rate_identity() {
        let consts = c();
        for (u, nu, b) in [(1e-15, 6e14, 3.0), (2.5e-17, 1e13, 1e5), (0.0, 1e15, 1.0)] {
            let r = smekal_rate_decomposition(u, nu, &consts, b).unwrap();
            assert!(r.identity_residual < 1e-12);
            assert!((r.a_coeff / b / (8.0 * PI * consts.h * nu.powi(3) / consts.c.powi(3)) - 1.0).abs() < 1e-15);
        }
        let nu = 6e14;
        let t = consts.h * nu / (consts.k * std::f64::consts::LN_2);
        let u = planck_density(nu, t, &consts).unwrap();
        let r = smekal_rate_decomposition(u, nu, &consts, 1.0).unwrap();
        assert!((r.particle_brace / r.wave_brace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ehrenfest_forms() {
        let (band, t) = band_at_x(1.0, 30.0, &c()).unwrap();
        let (e, f) = ehrenfest_vs_einstein_forms(&band, t, 1.0, &c()).unwrap();
        assert_eq!(e, f);
        let (e, f) = ehrenfest_vs_einstein_forms(&band, t, 1e-6, &c()).unwrap();
        assert!((f.particle_term / e.particle_term - 1e-6).abs() < 1e-18);
        assert_eq!(e.wave_term, f.wave_term);
        let c = c();
        let shared = c.c.powi(3) * e.mean_energy.powi(2) / (8.0 * PI * band.nu.powi(2) * band.d_nu * band.volume);
        assert!((e.wave_term / shared - 1.0).abs() < 1e-12);
    }
}
