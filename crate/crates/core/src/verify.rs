//! The battery behind `bbfluct verify-all`.
//!
//! Every check is deterministic for a given seed: analytic identities need no
//! randomness and each Monte Carlo check draws from its own stream.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::combinatorics::{fermi_variant, verify_count_identities};
use crate::decomposition::{
    self, cf_factorization_check, decompose, exact_binary_pmf, t_grid, thermo_identity_check, DecompositionKind,
};
use crate::distributions::{binomial_to_poisson_check, BoseGeometric};
use crate::fluctuation::{
    band_at_x, ehrenfest_vs_einstein_forms, einstein_budget, four_routes, mirror_momentum_fluct,
    mirror_setup_at_wavelength, poisson_particle_variance, smekal_rate_decomposition, Law, MirrorDensity,
};
use crate::kinetics::{channel_split, equilibration_run, EquilibrationConfig};
use crate::quantized_string::{
    fit_two_term_shape, kernel_delta_limit, phase_averaged_fluctuation, segment_delta_matrix, MultiModeState,
    StringGeometry,
};
use crate::rng::stream;
use crate::spectral::{
    integrated_density, limit_densities, planck_density, stefan_boltzmann, wien_displacement_root, wien_lambda_t,
};
use crate::wavefield::{
    central_limit_walk, ehrenfest_ensemble, pulse_train_fluctuation, quadrature_energy_stats, PulseTrainConfig,
    QuadratureEnsemble, StepLaw, StringConfig,
};
use crate::{PhysicalConstants, Result};

/// How a value is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value − target| ≤ tolerance`.
    Within,
    /// `value ≤ tolerance`.
    AtMost,
    /// `value ≥ tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    /// Error text when the computation itself failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn push(&mut self, label: &str, value: Result<f64>, target: f64, tolerance: f64, comparison: Comparison) {
        let (value, error) = match value {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let passed = error.is_none()
            && match comparison {
                Comparison::Within => (value - target).abs() <= tolerance,
                Comparison::AtMost => value <= tolerance,
                Comparison::AtLeast => value >= tolerance,
            };
        self.checks.push(Check { label: label.to_string(), value, target, tolerance, comparison, passed, error });
    }

    fn within(&mut self, label: &str, value: Result<f64>, target: f64, tolerance: f64) {
        self.push(label, value, target, tolerance, Comparison::Within);
    }

    fn at_most(&mut self, label: &str, value: Result<f64>, bound: f64) {
        self.push(label, value, 0.0, bound, Comparison::AtMost);
    }

    fn at_least(&mut self, label: &str, value: Result<f64>, bound: f64) {
        self.push(label, value, 0.0, bound, Comparison::AtLeast);
    }
}

const X_GRID: [f64; 5] = [0.1, LN_2, 1.0, 5.0, 20.0];
const B_GRID: [f64; 3] = [0.1, 0.5, 0.9];

/// Run every check with Monte Carlo streams derived from `seed`.
pub fn verify_all(seed: u64) -> VerifyReport {
    let mut b = Battery { checks: Vec::new() };
    let consts = PhysicalConstants::default();
    spectral_checks(&mut b, &consts);
    fluctuation_checks(&mut b, &consts, seed);
    decomposition_checks(&mut b, seed);
    combinatorics_checks(&mut b);
    wavefield_checks(&mut b, seed);
    quantized_string_checks(&mut b);
    kinetics_checks(&mut b, seed);
    let passed = b.checks.iter().filter(|c| c.passed).count();
    let failed = b.checks.len() - passed;
    VerifyReport { seed, checks: b.checks, passed, failed }
}

fn spectral_checks(b: &mut Battery, consts: &PhysicalConstants) {
    b.within("wien displacement root", Ok(wien_displacement_root()), 4.965, 1e-3);
    b.within("wien lambda_max*T relative to 0.2899 cm K", Ok(wien_lambda_t(consts) / 0.2899), 1.0, 5e-3);
    for t in [100.0, 1000.0, 6000.0] {
        let rel =
            integrated_density(t, consts, 1e-10).map(|q| (q / (stefan_boltzmann(consts) * t.powi(4)) - 1.0).abs());
        b.at_most(&format!("stefan-boltzmann closed form vs quadrature at T={t}"), rel, 1e-6);
    }
    let t = 1000.0;
    let wien_gap = (|| {
        let nu = 20.0 * consts.k * t / consts.h;
        Ok((limit_densities(nu, t, consts)?.wien / planck_density(nu, t, consts)? - 1.0).abs())
    })();
    b.at_most("wien limit of planck density at x=20", wien_gap, 1e-8);
    let rj_gap = (|| {
        let nu = 1e-4 * consts.k * t / consts.h;
        Ok((limit_densities(nu, t, consts)?.rayleigh_jeans / planck_density(nu, t, consts)? - 1.0).abs())
    })();
    b.at_most("rayleigh-jeans limit of planck density at x=1e-4", rj_gap, 1e-4);
}

fn fluctuation_checks(b: &mut Battery, consts: &PhysicalConstants, seed: u64) {
    for x in X_GRID {
        for modes in [1.0, 10.0, 1000.0] {
            let gap = band_at_x(x, modes, consts)
                .and_then(|(band, t)| four_routes(&band, t, consts))
                .map(|r| r.max_pairwise_relative);
            b.at_most(&format!("four fluctuation routes agree, x={x:.4}, modes={modes}"), gap, 1e-5);
        }
    }
    let crossover = band_at_x(LN_2, 100.0, consts)
        .and_then(|(band, t)| einstein_budget(&band, t, consts))
        .map(|f| (f.particle_term / f.wave_term - 1.0).abs());
    b.at_most("particle term equals wave term at mean occupation 1", crossover, 1e-12);
    let mirror = mirror_setup_at_wavelength(5e-5, 1700.0, consts)
        .and_then(|s| mirror_momentum_fluct(&s, consts, MirrorDensity::Planck));
    b.at_most(
        "mirror friction route vs closed form",
        mirror.as_ref().map(|m| m.relative_gap).map_err(Clone::clone),
        1e-4,
    );
    b.at_most(
        "mirror momentum form vs energy form",
        mirror.as_ref().map(|m| (m.closed_form / m.energy_form - 1.0).abs()).map_err(Clone::clone),
        1e-12,
    );
    let ratio = mirror.map(|m| m.particle_term / m.wave_term);
    b.at_least("mirror particle/wave ratio at 0.5 micron, 1700 K above 1e7", ratio.clone(), 1e7);
    b.at_most("mirror particle/wave ratio at 0.5 micron, 1700 K below 1e8", ratio, 1e8);
    let smekal = (|| {
        let nu = 6e14;
        let t = consts.h * nu / (consts.k * LN_2);
        Ok(smekal_rate_decomposition(planck_density(nu, t, consts)?, nu, consts, 1.0)?.identity_residual)
    })();
    b.at_most("spontaneous and induced rate products rebuild the two-term budget", smekal, 1e-12);
    let forms = band_at_x(1.0, 100.0, consts).and_then(|(band, t)| {
        let (e1, _) = ehrenfest_vs_einstein_forms(&band, t, 0.1, consts)?;
        let (e2, _) = ehrenfest_vs_einstein_forms(&band, t, 0.01, consts)?;
        Ok((e1.total / e2.total - 1.0).abs())
    });
    b.at_most("two-term budget independent of sub-volume ratio", forms, 1e-12);
    let poisson = band_at_x(5.0, 1000.0, consts)
        .and_then(|(band, t)| poisson_particle_variance(&band, t, consts, Law::Wien, 200_000, seed))
        .map(|p| p.stats.variance_z(p.analytic).abs());
    b.at_most("poisson quanta give the particle term (z-score)", poisson, 4.0);
}

fn decomposition_checks(b: &mut Battery, seed: u64) {
    for bb in B_GRID {
        let worst = (0..=64u64)
            .try_fold(0.0f64, |w, n| Ok(w.max((exact_binary_pmf(n, bb)? - (1.0 - bb) * bb.powi(n as i32)).abs())));
        b.at_most(&format!("binary photon product equals bose pmf, b={bb}"), worst, 1e-12);
        let cf = cf_factorization_check(bb, &t_grid(64), decomposition::DEFAULT_TOL);
        b.at_most(
            &format!("binary characteristic function factorization, b={bb}"),
            cf.as_ref().map(|r| r.binary).map_err(Clone::clone),
            1e-10,
        );
        b.at_most(&format!("poisson multiplet characteristic function, b={bb}"), cf.map(|r| r.poisson), 1e-10);
        for kind in [DecompositionKind::Poisson, DecompositionKind::Binary] {
            let r = decompose(kind, bb, decomposition::DEFAULT_TOL, 1.0);
            let res = r.map(|r| r.residuals.mean.abs().max(r.residuals.variance.abs()).max(r.residuals.entropy.abs()));
            b.at_most(
                &format!("{kind:?} components sum to bose mean, variance, entropy, b={bb}").to_lowercase(),
                res,
                1e-8,
            );
        }
    }
    for kind in [DecompositionKind::Poisson, DecompositionKind::Binary] {
        for x in [0.5, LN_2, 2.0] {
            let r = thermo_identity_check(kind, x, decomposition::DEFAULT_TOL);
            b.at_most(&format!("{kind:?} components share the temperature, x={x:.4}").to_lowercase(), r, 1e-6);
        }
    }
    let bb = 0.5;
    let mut rng = stream(seed, 101);
    let chi = decomposition::poisson_multiplet_params(bb, decomposition::DEFAULT_TOL).and_then(|set| {
        let s: Vec<u64> = (0..100_000).map(|_| decomposition::sample_bose_via_multiplets(&set, &mut rng)).collect();
        decomposition::chi_square_vs_bose(&s, bb, 16)
    });
    b.at_least("poisson multiplet sampler vs bose law (p-value)", chi.map(|c| c.p_value), 1e-4);
    let mut rng = stream(seed, 102);
    let chi = decomposition::binary_photon_params(bb, decomposition::DEFAULT_TOL).and_then(|set| {
        let s: Vec<u64> = (0..100_000).map(|_| decomposition::sample_bose_via_binary(&set, &mut rng)).collect();
        decomposition::chi_square_vs_bose(&s, bb, 16)
    });
    b.at_least("binary photon sampler vs bose law (p-value)", chi.map(|c| c.p_value), 1e-4);
    let tv = (|| {
        let small = binomial_to_poisson_check(10, 0.1)?.total_variation;
        let large = binomial_to_poisson_check(10_000, 1e-4)?.total_variation;
        Ok(large / small)
    })();
    b.at_most("binomial approaches poisson as the draw count grows", tv, 0.01);
}

fn combinatorics_checks(b: &mut Battery) {
    let mut bad = 0.0;
    let mut err = None;
    for n_rec in 1..=7 {
        for q in 0..=7 {
            match verify_count_identities(n_rec, q) {
                Ok(c) if c.pass => {}
                Ok(_) => bad += 1.0,
                Err(e) => err = Some(e),
            }
        }
    }
    b.at_most("collocation and association sums, N,n <= 7 (failures)", err.map_or(Ok(bad), Err), 0.0);
    let mut bad = 0.0;
    let mut err = None;
    for n_rec in 1..=7 {
        for q in 0..=n_rec {
            match fermi_variant(n_rec, q) {
                Ok(c) if c.pass => {}
                Ok(_) => bad += 1.0,
                Err(e) => err = Some(e),
            }
        }
    }
    b.at_most("exclusion count sums to C(N,n), N <= 7 (failures)", err.map_or(Ok(bad), Err), 0.0);
}

fn wavefield_checks(b: &mut Battery, seed: u64) {
    let q = (|| {
        let ens = QuadratureEnsemble::new(1.0, 200_000, seed)?;
        let mut rng = stream(seed, 201);
        let r = quadrature_energy_stats(&ens, 3.0, &mut rng)?;
        Ok(r)
    })();
    b.at_most(
        "gaussian quadratures: mean energy (z-score)",
        q.as_ref().map(|r| r.energy.mean_z(r.analytic_mean).abs()).map_err(Clone::clone),
        4.0,
    );
    b.at_most(
        "gaussian quadratures: variance equals mean squared (z-score)",
        q.map(|r| ((r.variance_ratio - 1.0) / r.variance_ratio_se).abs()),
        4.0,
    );
    let mut rng = stream(seed, 202);
    let coin = central_limit_walk(|r: &mut crate::rng::SimRng| StepLaw::Coin.sample(r), 1, 100_000, &mut rng);
    b.within("single coin step distance from normal", coin.map(|c| c.ks_distance), 0.5 - 0.158_655_253_931_457, 2e-3);
    let pulse = pulse_train_fluctuation(&PulseTrainConfig { realizations: 100, seed, ..Default::default() })
        .map(|w| ((w.q - w.q_expected) / w.q_se).abs());
    b.at_most("pulse train fluctuation at one pulse count (z-score)", pulse, 4.0);
    let string =
        ehrenfest_ensemble(&StringConfig { n_lo: 2000, n_hi: 2039, segment: 0.25, seed, ..Default::default() }, 2000);
    b.at_most(
        "string segment, ensemble route vs exact kernels (z-score)",
        string.as_ref().map(|r| r.ensemble.z_exact().abs()).map_err(Clone::clone),
        4.0,
    );
    b.at_most(
        "string segment, time-then-ensemble route vs exact kernels (z-score)",
        string.map(|r| r.time_then_ensemble.z_exact().abs()),
        4.0,
    );
}

fn quantized_string_checks(b: &mut Battery) {
    let g = StringGeometry::default();
    for (modes, cutoff) in [(vec![200u64, 201], 12usize), (vec![200, 201, 202], 12)] {
        let r = MultiModeState::with_occupations(&modes, g, &vec![1.0; modes.len()], cutoff, 1e-3)
            .and_then(|s| phase_averaged_fluctuation(&segment_delta_matrix(&s, 0.3)?));
        let label = format!("quantized string: zero-point pieces cancel, {} modes", modes.len());
        b.at_most(
            &label,
            r.as_ref().map(|r| (r.cancellation_residual / r.zero_point).abs()).map_err(Clone::clone),
            1e-10,
        );
        let label = format!("quantized string: third term share of budget, {} modes", modes.len());
        b.at_most(&label, r.map(|r| r.third_term / r.quantum), 0.01);
    }
    let fit = fit_two_term_shape(&[200, 201], g, 0.3, &[0.1, 0.25, 0.5, 1.0], 16, 1e-3);
    b.within(
        "quantized string: two-term shape ratio",
        fit.as_ref().map(|f| f.shape_ratio).map_err(Clone::clone),
        1.0,
        0.05,
    );
    b.at_most("quantized string: classical budget has no particle term", fit.map(|f| f.classical_particle_share), 0.05);
    let flat = kernel_delta_limit(50.0, 1.0, &[10.0], |_| 1.0).map(|k| k.max_deviation);
    b.at_most("segment kernel integrates to one", flat, 1e-8);
}

fn kinetics_checks(b: &mut Battery, seed: u64) {
    for x in [LN_2, 1.0] {
        let cfg = EquilibrationConfig { modes: 1, x, t_max: 5e4, keep_log: true, seed, ..Default::default() };
        let run = equilibration_run(&cfg);
        b.at_least(
            &format!("cavity occupation law is bose, x={x:.4} (p-value)"),
            run.as_ref().map(|r| r.chi_square.p_value).map_err(Clone::clone),
            1e-4,
        );
        b.at_most(
            &format!("stimulated/spontaneous emissions equal mean occupation, x={x:.4} (z-score)"),
            run.and_then(|r| channel_split(&r)).map(|c| c.z().abs()),
            4.0,
        );
    }
    let law = BoseGeometric::from_x(LN_2).map(|l| l.mean());
    b.within("bose mean occupation at x=ln 2", law, 1.0, 1e-12);
}
