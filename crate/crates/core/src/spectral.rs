//! Physical constants, the Planck law and its limits, mode counting,
//! and the Stefan–Boltzmann and Wien displacement laws.
//!
//! All quantities are CGS: erg, cm, sec, grad.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::numerics;
use crate::{Error, Result};

/// Largest allowed relative bandwidth `dν/ν` of a [`SpectralBand`].
pub const MAX_RELATIVE_BANDWIDTH: f64 = 0.01;

/// Planck's constant, Boltzmann's constant and the speed of light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// erg·sec
    pub h: f64,
    /// erg/grad
    pub k: f64,
    /// cm/sec
    pub c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { h: 6.626e-27, k: 1.381e-16, c: 2.998e10 }
    }
}

impl PhysicalConstants {
    pub fn new(h: f64, k: f64, c: f64) -> Result<Self> {
        if !(h > 0.0 && k > 0.0 && c > 0.0) {
            return Err(Error::Domain("physical constants must be positive".into()));
        }
        Ok(Self { h, k, c })
    }

    /// Mode density `8πν²/c³` per unit volume and frequency.
    pub fn mode_density(&self, nu: f64) -> f64 {
        8.0 * PI * nu * nu / self.c.powi(3)
    }

    /// `x = hν/kT`.
    pub fn x(&self, nu: f64, t: f64) -> f64 {
        self.h * nu / (self.k * t)
    }
}

/// A (frequency, temperature) working point with its dimensionless companions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePoint {
    pub nu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub x: f64,
    pub b: f64,
    pub n_bar: f64,
}

impl ModePoint {
    pub fn new(nu: f64, t: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(nu > 0.0 && t > 0.0) {
            return Err(Error::Domain(format!("need nu > 0 and T > 0, got nu={nu}, T={t}")));
        }
        let x = consts.x(nu, t);
        Ok(Self { nu, t, x, b: (-x).exp(), n_bar: mean_occupation(x)? })
    }

    /// The point with unit frequency whose temperature gives the requested `x`
    /// under `k = h = 1`. Useful for dimensionless checks.
    pub fn from_x(x: f64) -> Result<Self> {
        Ok(Self { nu: 1.0, t: 1.0 / x, x, b: (-x).exp(), n_bar: mean_occupation(x)? })
    }
}

/// A narrow band `(ν, ν + dν)` in a cavity of given volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    pub nu: f64,
    pub d_nu: f64,
    pub volume: f64,
    pub mode_count: f64,
}

impl SpectralBand {
    /// Build a band, rejecting `dν/ν` above [`MAX_RELATIVE_BANDWIDTH`].
    pub fn new(nu: f64, d_nu: f64, volume: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(nu > 0.0 && d_nu > 0.0 && volume > 0.0) {
            return Err(Error::Domain("band needs positive nu, d_nu and volume".into()));
        }
        let ratio = d_nu / nu;
        if ratio > MAX_RELATIVE_BANDWIDTH {
            return Err(Error::NarrowBand { ratio });
        }
        Ok(Self { nu, d_nu, volume, mode_count: volume * consts.mode_density(nu) * d_nu })
    }

    /// A band of given relative width whose volume is chosen so that it
    /// holds exactly `modes` modes.
    pub fn with_modes(nu: f64, rel_width: f64, modes: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(modes > 0.0) {
            return Err(Error::Domain("mode count must be positive".into()));
        }
        let d_nu = nu * rel_width;
        let volume = modes / (consts.mode_density(nu) * d_nu);
        let mut band = Self::new(nu, d_nu, volume, consts)?;
        band.mode_count = modes;
        Ok(band)
    }
}

/// Mean number of quanta `1/(eˣ−1)` of an oscillator.
pub fn mean_occupation(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    Ok(if x < 1e-6 {
        // 1/x − 1/2 + x/12 − x³/720
        1.0 / x - 0.5 + x / 12.0 - x * x * x / 720.0
    } else if x > 700.0 {
        (-x).exp()
    } else {
        1.0 / x.exp_m1()
    })
}

/// Planck spectral energy density `u_ν = (8πν²/c³)·hν·n̄` in erg·sec/cm³.
pub fn planck_density(nu: f64, t: f64, consts: &PhysicalConstants) -> Result<f64> {
    let p = ModePoint::new(nu, t, consts)?;
    Ok(consts.mode_density(nu) * consts.h * nu * p.n_bar)
}

/// Wien and Rayleigh–Jeans densities at the same point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitDensities {
    pub wien: f64,
    pub rayleigh_jeans: f64,
}

/// Wien coefficients `α = 8πh/c³` and `β = h/k` of `u = αν³e^{−βν/T}`.
pub fn wien_coefficients(consts: &PhysicalConstants) -> (f64, f64) {
    (8.0 * PI * consts.h / consts.c.powi(3), consts.h / consts.k)
}

pub fn limit_densities(nu: f64, t: f64, consts: &PhysicalConstants) -> Result<LimitDensities> {
    if !(nu > 0.0 && t > 0.0) {
        return Err(Error::Domain("need nu > 0 and T > 0".into()));
    }
    let (alpha, beta) = wien_coefficients(consts);
    Ok(LimitDensities {
        wien: alpha * nu.powi(3) * (-beta * nu / t).exp(),
        rayleigh_jeans: consts.mode_density(nu) * consts.k * t,
    })
}

/// Closed-form radiation constant `σ = 8π⁵k⁴/(15c³h³)`, with `∫u_ν dν = σT⁴`.
pub fn stefan_boltzmann(consts: &PhysicalConstants) -> f64 {
    8.0 * PI.powi(5) * consts.k.powi(4) / (15.0 * consts.c.powi(3) * consts.h.powi(3))
}

/// `∫₀^∞ u_ν dν` at temperature `t` by adaptive quadrature.
///
/// Integrates in `x = hν/kT`, where the integrand is `x³/(eˣ−1)`, and
/// rescales, so the result is accurate to about `rel_tol`.
pub fn integrated_density(t: f64, consts: &PhysicalConstants, rel_tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("T must be positive".into()));
    }
    let kt = consts.k * t;
    let scale = 8.0 * PI * kt.powi(4) / (consts.c.powi(3) * consts.h.powi(3));
    let integrand = |x: f64| if x <= 0.0 { 0.0 } else { x.powi(3) * mean_occupation(x).unwrap_or(0.0) };
    let q = numerics::integrate_to_infinity(integrand, 0.0, 0.0, rel_tol)?;
    Ok(scale * q.value)
}

/// Root of `e^{−b} + b/5 − 1 = 0` on `(1, 10)`.
pub fn wien_displacement_root() -> f64 {
    let f = |b: f64| (-b).exp() + b / 5.0 - 1.0;
    let df = |b: f64| 0.2 - (-b).exp();
    // The bracket is valid by construction: f(1) < 0 < f(10).
    numerics::newton_bisect(f, df, 1.0, 10.0, 1e-13).unwrap_or(f64::NAN)
}

/// `λ_m·T = ch/(k·b_root)` in cm·grad.
pub fn wien_lambda_t(consts: &PhysicalConstants) -> f64 {
    consts.c * consts.h / (consts.k * wien_displacement_root())
}

/// Number of modes `V·(8πν²/c³)·dν` in a band (real valued).
pub fn mode_count(band: &SpectralBand, consts: &PhysicalConstants) -> Result<f64> {
    let ratio = band.d_nu / band.nu;
    if ratio > MAX_RELATIVE_BANDWIDTH {
        return Err(Error::NarrowBand { ratio });
    }
    Ok(band.volume * consts.mode_density(band.nu) * band.d_nu)
}

/// Round a real mode count half-up for samplers that need an integer.
pub fn integer_modes(mode_count: f64) -> u64 {
    (mode_count + 0.5).floor().max(0.0) as u64
}
