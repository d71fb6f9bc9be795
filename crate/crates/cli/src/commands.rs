//! One function per subcommand: resolved parameters in, [`Report`] out.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::LN_2;

use bbfluct_core::combinatorics::{fermi_variant, verify_count_identities};
use bbfluct_core::decomposition::{decompose, DecompositionKind, DEFAULT_TOL};
use bbfluct_core::fluctuation::{band_at_x, einstein_budget, four_routes};
use bbfluct_core::kinetics::{
    bose_bin_probabilities, channel_split, equilibration_run, EquilibrationConfig, InitialCondition, HIST_BINS,
};
use bbfluct_core::quantized_string::{
    fit_two_term_shape, phase_averaged_fluctuation, segment_delta_matrix_with, KernelChoice, MultiModeState,
    StringGeometry, DIMENSION_BUDGET,
};
use bbfluct_core::spectral::{
    integrated_density, limit_densities, planck_density, stefan_boltzmann, wien_displacement_root, wien_lambda_t,
};
use bbfluct_core::verify::verify_all;
use bbfluct_core::wavefield::{
    ehrenfest_ensemble, pulse_train_scan, pulse_train_series, random_phase_fluctuation, AmplitudeLaw, PulseTrainConfig,
    RandomPhaseConfig, StringConfig,
};
use bbfluct_core::{PhysicalConstants, Result};

use crate::output::{num, Report, Table};

/// Run-wide settings after merging file and flags.
pub struct Run {
    pub seed: u64,
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Temperature in K [default: 6000].
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Lowest frequency in Hz [default: 1e13].
    #[arg(long)]
    pub nu_min: Option<f64>,
    /// Highest frequency in Hz [default: 3e15].
    #[arg(long)]
    pub nu_max: Option<f64>,
    /// Log-spaced grid points [default: 200].
    #[arg(long)]
    pub points: Option<usize>,
}

pub fn spectrum(a: &SpectrumArgs, _run: &Run) -> Result<Report> {
    let consts = PhysicalConstants::default();
    let t = a.temperature.unwrap_or(6000.0);
    let (lo, hi) = (a.nu_min.unwrap_or(1e13), a.nu_max.unwrap_or(3e15));
    let points = a.points.unwrap_or(200).max(2);
    if !(lo > 0.0 && hi > lo) {
        return Err(bbfluct_core::Error::Config("need 0 < nu-min < nu-max".into()));
    }
    let mut table = Table::new(&["nu", "x", "n_bar", "planck", "wien", "rayleigh_jeans"]);
    let mut rows = Vec::new();
    for i in 0..points {
        let nu = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
        let x = consts.x(nu, t);
        let u = planck_density(nu, t, &consts)?;
        let lim = limit_densities(nu, t, &consts)?;
        let n_bar = 1.0 / x.exp_m1();
        table.push(vec![num(nu), num(x), num(n_bar), num(u), num(lim.wien), num(lim.rayleigh_jeans)]);
        rows.push(json!({"nu": nu, "x": x, "n_bar": n_bar, "planck": u, "wien": lim.wien, "rayleigh_jeans": lim.rayleigh_jeans}));
    }
    let sigma = stefan_boltzmann(&consts);
    let integral = integrated_density(t, &consts, 1e-10)?;
    let rel = (integral / (sigma * t.powi(4)) - 1.0).abs();
    let mut r = Report::new(
        &json!({
            "temperature": t,
            "wien_root": wien_displacement_root(),
            "lambda_max_t": wien_lambda_t(&consts),
            "radiation_constant": sigma,
            "integrated_density": integral,
            "integral_relative_error": rel,
            "rows": rows,
        }),
        table,
    );
    r.assert("integrated density matches the radiation constant", rel < 1e-6);
    Ok(r)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FluctuationArgs {
    /// hν/kT [default: ln 2].
    #[arg(long)]
    pub x: Option<f64>,
    /// Modes in the band [default: 100].
    #[arg(long)]
    pub modes: Option<f64>,
}

pub fn fluctuation(a: &FluctuationArgs, _run: &Run) -> Result<Report> {
    let consts = PhysicalConstants::default();
    let x = a.x.unwrap_or(LN_2);
    let modes = a.modes.unwrap_or(100.0);
    let (band, t) = band_at_x(x, modes, &consts)?;
    let b = einstein_budget(&band, t, &consts)?;
    let f = four_routes(&band, t, &consts)?;
    let header = [
        "x",
        "n_bar",
        "modes",
        "mean_energy",
        "particle",
        "wave",
        "total",
        "thermodynamic",
        "entropy_curvature",
        "distribution",
        "max_pairwise_relative",
    ];
    let mut table = Table::new(&header);
    table.push(
        [
            x,
            b.n_bar,
            modes,
            b.mean_energy,
            b.particle_term,
            b.wave_term,
            b.total,
            f.thermodynamic,
            f.entropy_curvature,
            f.distribution,
            f.max_pairwise_relative,
        ]
        .into_iter()
        .map(num)
        .collect(),
    );
    let mut r = Report::new(&json!({"budget": b, "routes": f}), table);
    r.assert("four fluctuation routes agree to 1e-5", f.max_pairwise_relative < 1e-5);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Poisson,
    Binary,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DecomposeArgs {
    /// Bose ratio e^{-x} [default: 0.5].
    #[arg(long)]
    pub b: Option<f64>,
    /// Decomposition [default: binary].
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Cutoff tolerance on dropped components [default: 1e-14].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Energy quantum [default: 1].
    #[arg(long)]
    pub h_nu: Option<f64>,
}

pub fn decompose_cmd(a: &DecomposeArgs, _run: &Run) -> Result<Report> {
    let kind = match a.kind.unwrap_or(Kind::Binary) {
        Kind::Poisson => DecompositionKind::Poisson,
        Kind::Binary => DecompositionKind::Binary,
    };
    let rep = decompose(kind, a.b.unwrap_or(0.5), a.tol.unwrap_or(DEFAULT_TOL), a.h_nu.unwrap_or(1.0))?;
    let mut table = Table::new(&["weight", "parameter", "mean", "variance", "entropy"]);
    for i in 0..rep.component_weights.len() {
        table.push(vec![
            rep.component_weights[i].to_string(),
            num(rep.component_parameters[i]),
            num(rep.component_means[i]),
            num(rep.component_variances[i]),
            num(rep.component_entropies[i]),
        ]);
    }
    let worst = rep.residuals.mean.abs().max(rep.residuals.variance.abs()).max(rep.residuals.entropy.abs());
    let mut r = Report::new(&rep, table);
    r.assert("component sums reproduce bose mean, variance and entropy to 1e-10", worst < 1e-10);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Bose,
    Fixed,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StringArgs {
    /// Lowest harmonic [default: 10000].
    #[arg(long)]
    pub n_lo: Option<u64>,
    /// Highest harmonic [default: 10199].
    #[arg(long)]
    pub n_hi: Option<u64>,
    /// Segment length l, string length 1 [default: 0.25].
    #[arg(long)]
    pub segment: Option<f64>,
    /// Amplitude law [default: bose].
    #[arg(long, value_enum)]
    pub law: Option<Law>,
    /// Mean squared amplitude, in quanta for the bose law [default: 1].
    #[arg(long)]
    pub n_bar: Option<f64>,
}

pub fn string(a: &StringArgs, run: &Run) -> Result<Report> {
    let n_bar = a.n_bar.unwrap_or(1.0);
    let cfg = StringConfig {
        n_lo: a.n_lo.unwrap_or(10_000),
        n_hi: a.n_hi.unwrap_or(10_199),
        segment: a.segment.unwrap_or(0.25),
        amplitude_law: match a.law.unwrap_or(Law::Bose) {
            Law::Bose => AmplitudeLaw::Bose { n_bar },
            Law::Fixed => AmplitudeLaw::Fixed { b_sq: n_bar },
        },
        seed: run.seed,
        ..Default::default()
    };
    let res = ehrenfest_ensemble(&cfg, run.samples.unwrap_or(10_000) as usize)?;
    let mut table = Table::new(&["route", "value", "se", "closed_form", "exact", "z_closed", "z_exact"]);
    for (name, e) in [("ensemble", res.ensemble), ("time_then_ensemble", res.time_then_ensemble)] {
        table.push(vec![
            name.into(),
            num(e.value),
            num(e.se),
            num(e.closed_form),
            num(e.exact),
            num(e.z_closed()),
            num(e.z_exact()),
        ]);
    }
    let mut r = Report::new(&json!({"config": cfg, "result": res}), table);
    r.assert("ensemble route within 4 SE of the exact-kernel value", res.ensemble.z_exact().abs() < 4.0);
    r.assert(
        "time-then-ensemble route within 4 SE of the exact-kernel value",
        res.time_then_ensemble.z_exact().abs() < 4.0,
    );
    Ok(r)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PulseTrainArgs {
    /// Pulse counts to scan [default: 100,200,400,800].
    #[arg(long, value_delimiter = ',')]
    pub pulses: Option<Vec<usize>>,
    /// Pulse length τ, period 1 [default: 0.01].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Central order n0 [default: 40000].
    #[arg(long)]
    pub n0: Option<u64>,
    /// Half-width of the order spread [default: 2000].
    #[arg(long)]
    pub bandwidth: Option<u64>,
    /// Emit the (t, A, E) series of one realization instead of the scan.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub series: Option<bool>,
}

pub fn pulse_train(a: &PulseTrainArgs, run: &Run) -> Result<Report> {
    let d = PulseTrainConfig::default();
    let n0 = a.n0.unwrap_or(d.n0);
    let base = PulseTrainConfig {
        tau: a.tau.unwrap_or(d.tau),
        n0,
        bandwidth_orders: a.bandwidth.unwrap_or(d.bandwidth_orders),
        window: d.t_total / n0 as f64,
        realizations: run.samples.map_or(d.realizations, |s| s as usize),
        seed: run.seed,
        ..d
    };
    let pulses = a.pulses.clone().unwrap_or_else(|| vec![100, 200, 400, 800]);
    if a.series.unwrap_or(false) {
        let cfg = PulseTrainConfig { p_pulses: pulses[0], ..base };
        let s = pulse_train_series(&cfg)?;
        let mut table = Table::new(&["t", "A", "E"]);
        for p in &s {
            table.push(vec![num(p.t), num(p.a), num(p.e)]);
        }
        return Ok(Report::new(&json!({"config": cfg, "series": s}), table));
    }
    let (points, fit) = pulse_train_scan(&base, &pulses)?;
    let baseline_cfg = RandomPhaseConfig { seed: run.seed, ..Default::default() };
    let baseline_points = random_phase_fluctuation(&baseline_cfg, &[0.5, 1.0, 2.0, 4.0])?;
    let baseline =
        bbfluct_core::wavefield::fit_fluctuation(&baseline_points, baseline_cfg.k * baseline_cfg.c.powi(2) / 2.0)?;
    let mut table = Table::new(&["pulses", "e_bar", "q", "q_se", "q_expected", "q_analytic"]);
    for (p, w) in pulses.iter().zip(&points) {
        table.push(vec![p.to_string(), num(w.e_bar), num(w.q), num(w.q_se), num(w.q_expected), num(w.q_analytic)]);
    }
    let mut r = Report::new(
        &json!({"config": base, "pulses": pulses, "points": points, "fit": fit, "random_phase_fit": baseline}),
        table,
    );
    r.assert("particle coefficient within 0.1 of one quantum", (fit.particle_coefficient - 1.0).abs() <= 0.1);
    r.assert("wave coefficient within 0.1 of one", (fit.delta - 1.0).abs() <= 0.1);
    r.assert("random-phase baseline has no particle term", baseline.particle_coefficient.abs() <= 0.05);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernels {
    Resonant,
    Full,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BhjArgs {
    /// Mode indices [default: 200,201].
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<u64>>,
    /// Highest occupation kept per mode [default: 12].
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Segment length, string length 1 [default: 0.3].
    #[arg(long)]
    pub segment: Option<f64>,
    /// Mean occupations for the shape fit [default: 0.1,0.25,0.5,1].
    #[arg(long, value_delimiter = ',')]
    pub n_bars: Option<Vec<f64>>,
    /// Bound on truncated Bose weight [default: 1e-3].
    #[arg(long)]
    pub leakage: Option<f64>,
    /// Overlap kernels [default: resonant].
    #[arg(long, value_enum)]
    pub kernels: Option<Kernels>,
}

pub fn bhj(a: &BhjArgs, _run: &Run) -> Result<Report> {
    let g = StringGeometry::default();
    let modes = a.modes.clone().unwrap_or_else(|| vec![200, 201]);
    let cutoff = a.cutoff.unwrap_or(12);
    let l = a.segment.unwrap_or(0.3);
    let n_bars = a.n_bars.clone().unwrap_or_else(|| vec![0.1, 0.25, 0.5, 1.0]);
    let leak = a.leakage.unwrap_or(1e-3);
    let kernels = match a.kernels.unwrap_or(Kernels::Resonant) {
        Kernels::Resonant => KernelChoice::Resonant,
        Kernels::Full => KernelChoice::Full,
    };
    let mut budgets = Vec::new();
    let mut table = Table::new(&[
        "n_bar",
        "mean_energy",
        "quantum",
        "normal_ordered",
        "classical",
        "zero_point",
        "cross",
        "cancellation_residual",
        "third_term",
        "leakage",
    ]);
    for &nb in &n_bars {
        let s = MultiModeState::with_occupations(&modes, g, &vec![nb; modes.len()], cutoff, leak)?;
        let b = phase_averaged_fluctuation(&segment_delta_matrix_with(&s, l, kernels, DIMENSION_BUDGET)?)?;
        table.push(
            [
                nb,
                b.mean_energy,
                b.quantum,
                b.normal_ordered,
                b.classical,
                b.zero_point,
                b.cross,
                b.cancellation_residual,
                b.third_term,
                b.leakage,
            ]
            .into_iter()
            .map(num)
            .collect(),
        );
        budgets.push(b);
    }
    let fit = fit_two_term_shape(&modes, g, l, &n_bars, cutoff, leak)?;
    let worst_cancel = budgets.iter().map(|b| (b.cancellation_residual / b.zero_point).abs()).fold(0.0, f64::max);
    let mut r =
        Report::new(&json!({"modes": modes, "cutoff": cutoff, "segment": l, "budgets": budgets, "shape": fit}), table);
    if kernels == KernelChoice::Resonant {
        r.assert("zero-point pieces cancel to 1e-10", worst_cancel < 1e-10);
    }
    r.assert("two-term shape within 5%", (fit.shape_ratio - 1.0).abs() < 0.05);
    r.assert("classical budget has no particle term (5%)", fit.classical_particle_share < 0.05);
    Ok(r)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CombinatoricsArgs {
    /// Largest receptacle and quantum count [default: 7].
    #[arg(long)]
    pub n_max: Option<u64>,
}

pub fn combinatorics(a: &CombinatoricsArgs, _run: &Run) -> Result<Report> {
    let n_max = a.n_max.unwrap_or(7);
    let mut table = Table::new(&[
        "N",
        "n",
        "sum_a",
        "expected_a",
        "sum_ab",
        "expected_ab",
        "fermi_sum_a",
        "fermi_expected",
        "pass",
    ]);
    let mut rows = Vec::new();
    let mut all = true;
    for n_rec in 1..=n_max {
        for q in 0..=n_max {
            let c = verify_count_identities(n_rec, q)?;
            let fermi = if q <= n_rec { Some(fermi_variant(n_rec, q)?) } else { None };
            let pass = c.pass && !matches!(&fermi, Some(f) if !f.pass);
            all &= pass;
            let (fs, fe) = fermi
                .as_ref()
                .map_or((String::new(), String::new()), |f| (f.sum_a.to_string(), f.expected.to_string()));
            table.push(vec![
                n_rec.to_string(),
                q.to_string(),
                c.sum_a.to_string(),
                c.expected_a.to_string(),
                c.sum_ab.to_string(),
                c.expected_ab.to_string(),
                fs,
                fe,
                pass.to_string(),
            ]);
            rows.push(json!({"counts": c, "exclusion": fermi}));
        }
    }
    let mut r = Report::new(&json!({"n_max": n_max, "rows": rows}), table);
    r.assert("counting identities hold exactly", all);
    Ok(r)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct KineticsArgs {
    /// hν/kT of the bath [default: ln 2].
    #[arg(long)]
    pub x: Option<f64>,
    /// Cavity modes [default: 1].
    #[arg(long)]
    pub modes: Option<usize>,
    /// Two-level atoms [default: 100].
    #[arg(long)]
    pub atoms: Option<f64>,
    /// Run length in relaxation times [default: 50000].
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Quanta placed in mode 0 at the start [default: 0].
    #[arg(long)]
    pub initial_quanta: Option<u64>,
}

pub fn kinetics(a: &KineticsArgs, run: &Run) -> Result<Report> {
    let cfg = EquilibrationConfig {
        modes: a.modes.unwrap_or(1),
        x: a.x.unwrap_or(LN_2),
        atoms: a.atoms.unwrap_or(100.0),
        t_max: a.t_max.unwrap_or(5e4),
        initial: match a.initial_quanta.unwrap_or(0) {
            0 => InitialCondition::Empty,
            q => InitialCondition::Concentrated { quanta: q },
        },
        keep_log: true,
        seed: run.seed,
        ..Default::default()
    };
    let run_ = equilibration_run(&cfg)?;
    let split = channel_split(&run_)?;
    let probs = bose_bin_probabilities(cfg.x)?;
    let mut table = Table::new(&["mode", "n", "count", "expected_probability"]);
    for (k, h) in run_.histograms.iter().enumerate() {
        for (n, c) in h.iter().enumerate() {
            let label = if n == HIST_BINS { format!(">={HIST_BINS}") } else { n.to_string() };
            table.push(vec![k.to_string(), label, c.to_string(), num(probs[n])]);
        }
    }
    let summary = json!({
        "config": cfg,
        "events": run_.events,
        "occupation": run_.occupation,
        "n_bar_analytic": run_.n_bar_analytic,
        "variance_analytic": run_.variance_analytic,
        "chi_square": run_.chi_square,
        "tv_checkpoints": run_.tv_checkpoints,
        "histograms": run_.histograms,
        "channels": split,
    });
    let mut r = Report::new(&summary, table);
    r.assert("occupation law is bose (chi-square p >= 1e-4)", run_.chi_square.p_value >= 1e-4);
    r.assert("mean occupation within 4 SE", run_.mean_z().abs() < 4.0);
    r.assert("stimulated/spontaneous ratio within 4 SE of mean occupation", split.z().abs() < 4.0);
    Ok(r)
}

pub fn verify(run: &Run) -> Result<Report> {
    let rep = verify_all(run.seed);
    let mut table = Table::new(&["label", "value", "target", "tolerance", "comparison", "passed"]);
    for c in &rep.checks {
        let cmp =
            serde_json::to_value(c.comparison).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        table.push(vec![c.label.clone(), num(c.value), num(c.target), num(c.tolerance), cmp, c.passed.to_string()]);
    }
    let mut r = Report::new(&rep, table);
    for c in &rep.checks {
        r.assert(c.label.clone(), c.passed);
    }
    Ok(r)
}
