//! Matter-mediated equilibration of cavity modes.
//!
//! A speck of two-level atoms with fixed populations `N2/N1 = e^{-x}` (an
//! infinite bath behind it) exchanges quanta with each mode. Emission into a
//! mode holding `n` quanta has rate `N2·A·(n+1)`: the `1` is the spontaneous
//! channel and the `n` the stimulated one. Absorption has rate `N1·A·n`.
//! Modes never talk to each other directly. Since
//! `rate(n→n+1)/rate(n+1→n) = e^{-x}`, the stationary law of each mode is
//! geometric with ratio `e^{-x}`, i.e. Bose with `n̄ = 1/(e^x − 1)`.
//!
//! In terms of the radiation density, `u = Z_ν·hν·n̄` turns the
//! `B·u`-proportional rates into the per-mode `A·n` form used here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::BoseGeometric;
use crate::error::domain;
use crate::rng::{open01, stream, DEFAULT_SEED};
use crate::stats::{chi_square, total_variation, Accumulator, ChiSquare, EnsembleStats};
use crate::{Error, Result};

/// Mode occupations plus the atom populations that drive them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityState {
    pub mode_occupations: Vec<u64>,
    /// `(N1, N2)`: ground and excited atoms.
    pub atom_populations: (f64, f64),
    pub x: f64,
}

impl CavityState {
    /// `atoms` two-level systems split in the Boltzmann ratio at `x`.
    pub fn new(modes: usize, atoms: f64, x: f64) -> Result<Self> {
        if modes == 0 || !(atoms >= 0.0) || !(x > 0.0) {
            return Err(domain("need at least one mode, atoms >= 0 and x > 0"));
        }
        let b = (-x).exp();
        Ok(Self { mode_occupations: vec![0; modes], atom_populations: (atoms / (1.0 + b), atoms * b / (1.0 + b)), x })
    }

    /// Remove all matter; the radiation can no longer rearrange itself.
    pub fn remove_atoms(&mut self) {
        self.atom_populations = (0.0, 0.0);
    }

    pub fn total_quanta(&self) -> u64 {
        self.mode_occupations.iter().sum()
    }
}

/// Per-mode emission and absorption rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub a_coefficient: f64,
    /// `N2·A·(n+1)`.
    pub up: Vec<f64>,
    /// `N1·A·n`.
    pub down: Vec<f64>,
}

impl RateTable {
    pub fn new(state: &CavityState, a_coefficient: f64) -> Result<Self> {
        if !(a_coefficient > 0.0) {
            return Err(domain("A must be positive"));
        }
        let mut t = Self {
            a_coefficient,
            up: vec![0.0; state.mode_occupations.len()],
            down: vec![0.0; state.mode_occupations.len()],
        };
        for k in 0..t.up.len() {
            t.update(state, k);
        }
        Ok(t)
    }

    pub fn update(&mut self, state: &CavityState, mode: usize) {
        let n = state.mode_occupations[mode] as f64;
        let (n1, n2) = state.atom_populations;
        self.up[mode] = n2 * self.a_coefficient * (n + 1.0);
        self.down[mode] = n1 * self.a_coefficient * n;
    }

    pub fn total(&self) -> f64 {
        self.up.iter().sum::<f64>() + self.down.iter().sum::<f64>()
    }

    /// Spontaneous part of the emission rate into `mode`.
    pub fn spontaneous(&self, state: &CavityState, _mode: usize) -> f64 {
        state.atom_populations.1 * self.a_coefficient
    }

    /// Stimulated part of the emission rate into `mode`.
    pub fn stimulated(&self, state: &CavityState, mode: usize) -> f64 {
        state.atom_populations.1 * self.a_coefficient * state.mode_occupations[mode] as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SpontaneousEmission,
    StimulatedEmission,
    Absorption,
}

/// One transition: a single quantum moves between the atoms and `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub wait: f64,
    pub mode: usize,
    pub kind: EventKind,
}

/// One exact stochastic step: exponential wait at the total rate, then an
/// event picked in proportion to its rate. Emissions are attributed to the
/// spontaneous or stimulated channel in proportion `1 : n`.
pub fn step_gillespie<R: Rng + ?Sized>(state: &mut CavityState, rates: &mut RateTable, rng: &mut R) -> Result<Event> {
    let total = rates.total();
    if !(total > 0.0) {
        return Err(Error::Frozen);
    }
    let wait = -open01(rng).ln() / total;
    let mut target = rng.random::<f64>() * total;
    let modes = rates.up.len();
    let mut pick = None;
    for k in 0..modes {
        if target < rates.up[k] {
            pick = Some((k, true));
            break;
        }
        target -= rates.up[k];
        if target < rates.down[k] {
            pick = Some((k, false));
            break;
        }
        target -= rates.down[k];
    }
    // Rounding can leave `target` just past the last bucket.
    let (mode, emit) = pick.unwrap_or_else(|| {
        let k = (0..modes).rev().find(|&k| rates.up[k] + rates.down[k] > 0.0).unwrap_or(0);
        (k, rates.up[k] > 0.0)
    });
    let n = state.mode_occupations[mode];
    let kind = if emit {
        state.mode_occupations[mode] = n + 1;
        if rng.random::<f64>() * ((n + 1) as f64) < (n as f64) {
            EventKind::StimulatedEmission
        } else {
            EventKind::SpontaneousEmission
        }
    } else {
        state.mode_occupations[mode] = n - 1;
        EventKind::Absorption
    };
    rates.update(state, mode);
    Ok(Event { wait, mode, kind })
}

/// Where the quanta start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Empty,
    /// All quanta in mode 0.
    Concentrated {
        quanta: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibrationConfig {
    pub modes: usize,
    pub x: f64,
    pub atoms: f64,
    pub a_coefficient: f64,
    /// Simulated time, in units of the relaxation time `1/(A(N1−N2))`.
    pub t_max: f64,
    /// Discarded start, same units.
    pub burn_in: f64,
    /// Spacing of occupation snapshots, same units.
    pub sample_interval: f64,
    pub initial: InitialCondition,
    /// Retain every event (needed by [`channel_split`]).
    pub keep_log: bool,
    pub seed: u64,
}

impl Default for EquilibrationConfig {
    fn default() -> Self {
        Self {
            modes: 10,
            x: std::f64::consts::LN_2,
            atoms: 100.0,
            a_coefficient: 1.0,
            t_max: 20_000.0,
            burn_in: 20.0,
            sample_interval: 5.0,
            initial: InitialCondition::Empty,
            keep_log: false,
            seed: DEFAULT_SEED,
        }
    }
}

/// Histogram bins `0..HIST_BINS` plus an overflow bin.
pub const HIST_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationRun {
    pub config: EquilibrationConfig,
    /// Pooled snapshot statistics over all modes.
    pub occupation: EnsembleStats,
    pub n_bar_analytic: f64,
    pub variance_analytic: f64,
    /// Snapshot histograms per mode, bins `0..16` and `≥ 16`.
    pub histograms: Vec<Vec<u64>>,
    /// Pooled histogram against the Bose law.
    pub chi_square: ChiSquare,
    /// `(time, total-variation distance)` at a third, two thirds and the end.
    pub tv_checkpoints: Vec<(f64, f64)>,
    pub events: u64,
    /// `(jumps n → n+1, jumps n+1 → n)` per level `n < 16`; stationarity
    /// makes the two counts balance.
    pub level_transitions: Vec<(u64, u64)>,
    pub log: Option<Vec<Event>>,
}

impl EquilibrationRun {
    /// Mean occupation in standard errors from the Bose value.
    pub fn mean_z(&self) -> f64 {
        self.occupation.mean_z(self.n_bar_analytic)
    }

    pub fn variance_z(&self) -> f64 {
        self.occupation.variance_z(self.variance_analytic)
    }
}

/// Bose probabilities for bins `0..HIST_BINS` and the overflow.
pub fn bose_bin_probabilities(x: f64) -> Result<Vec<f64>> {
    let law = BoseGeometric::from_x(x)?;
    let mut p: Vec<f64> = (0..HIST_BINS as u64).map(|n| law.pmf(n)).collect();
    p.push((-x * HIST_BINS as f64).exp());
    Ok(p)
}

/// Run the cavity from the configured start and collect spaced snapshots.
pub fn equilibration_run(cfg: &EquilibrationConfig) -> Result<EquilibrationRun> {
    if !(cfg.atoms > 0.0) {
        return Err(domain("at least one atom is needed for mixing"));
    }
    if !(cfg.t_max > cfg.burn_in && cfg.burn_in >= 0.0 && cfg.sample_interval > 0.0) {
        return Err(Error::Config("need t_max > burn_in >= 0 and sample_interval > 0".into()));
    }
    let mut state = CavityState::new(cfg.modes, cfg.atoms, cfg.x)?;
    if let InitialCondition::Concentrated { quanta } = cfg.initial {
        state.mode_occupations[0] = quanta;
    }
    let mut rates = RateTable::new(&state, cfg.a_coefficient)?;
    let (n1, n2) = state.atom_populations;
    let tau = 1.0 / (cfg.a_coefficient * (n1 - n2));
    let mut rng = stream(cfg.seed, 0);

    let probs = bose_bin_probabilities(cfg.x)?;
    let checkpoints = [cfg.t_max / 3.0, 2.0 * cfg.t_max / 3.0, cfg.t_max];
    let mut tv_checkpoints = Vec::new();
    let mut histograms = vec![vec![0u64; HIST_BINS + 1]; cfg.modes];
    let mut acc = Accumulator::default();
    let mut level_transitions = vec![(0u64, 0u64); HIST_BINS];
    let mut log = cfg.keep_log.then(Vec::new);
    let mut events = 0u64;
    let mut t = 0.0;
    let mut next_sample = cfg.burn_in;
    let mut next_check = 0;
    while next_sample <= cfg.t_max {
        let before = state.mode_occupations.clone();
        let ev = step_gillespie(&mut state, &mut rates, &mut rng)?;
        let t_next = t + ev.wait / tau;
        // Snapshots that fall inside the wait see the state before the jump.
        while next_sample <= cfg.t_max && next_sample < t_next {
            for (k, &n) in before.iter().enumerate() {
                histograms[k][(n as usize).min(HIST_BINS)] += 1;
                acc.push(n as f64);
            }
            while next_check < checkpoints.len() && next_sample + cfg.sample_interval > checkpoints[next_check] {
                tv_checkpoints.push((checkpoints[next_check], pooled_tv(&histograms, &probs)));
                next_check += 1;
            }
            next_sample += cfg.sample_interval;
        }
        t = t_next;
        events += 1;
        let n = before[ev.mode] as usize;
        match ev.kind {
            EventKind::Absorption if n - 1 < HIST_BINS => level_transitions[n - 1].1 += 1,
            EventKind::Absorption => {}
            _ if n < HIST_BINS => level_transitions[n].0 += 1,
            _ => {}
        }
        if let Some(l) = log.as_mut() {
            l.push(ev);
        }
    }
    while next_check < checkpoints.len() {
        tv_checkpoints.push((checkpoints[next_check], pooled_tv(&histograms, &probs)));
        next_check += 1;
    }
    let pooled = pool(&histograms);
    let law = BoseGeometric::from_x(cfg.x)?;
    Ok(EquilibrationRun {
        config: cfg.clone(),
        occupation: EnsembleStats::from_accumulator(&acc, cfg.seed)?,
        n_bar_analytic: law.mean(),
        variance_analytic: law.variance(),
        chi_square: chi_square(&pooled, &probs)?,
        histograms,
        tv_checkpoints,
        events,
        level_transitions,
        log,
    })
}

fn pool(histograms: &[Vec<u64>]) -> Vec<u64> {
    let mut out = vec![0u64; HIST_BINS + 1];
    for h in histograms {
        out.iter_mut().zip(h).for_each(|(o, v)| *o += v);
    }
    out
}

fn pooled_tv(histograms: &[Vec<u64>], probs: &[f64]) -> f64 {
    let pooled = pool(histograms);
    let total: u64 = pooled.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let emp: Vec<f64> = pooled.iter().map(|&c| c as f64 / total as f64).collect();
    total_variation(&emp, probs)
}

/// Chi-square of per-mode histograms against each other (homogeneity).
pub fn mode_homogeneity(histograms: &[Vec<u64>]) -> Result<ChiSquare> {
    let pooled = pool(histograms);
    let total: u64 = pooled.iter().sum();
    let keep: Vec<usize> = (0..pooled.len()).filter(|&j| pooled[j] > 0).collect();
    if histograms.len() < 2 || keep.len() < 2 {
        return Err(domain("need two modes and two occupied bins"));
    }
    let mut stat = 0.0;
    for h in histograms {
        let rows: u64 = h.iter().sum();
        for &j in &keep {
            let e = rows as f64 * pooled[j] as f64 / total as f64;
            stat += (h[j] as f64 - e).powi(2) / e;
        }
    }
    let dof = (histograms.len() - 1) * (keep.len() - 1);
    let dist = statrs::distribution::ChiSquared::new(dof as f64).map_err(|e| domain(e.to_string()))?;
    use statrs::distribution::ContinuousCDF;
    Ok(ChiSquare { statistic: stat, dof, p_value: dist.sf(stat) })
}

/// Emission events split by channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSplit {
    pub spontaneous: u64,
    pub stimulated: u64,
    /// `stimulated / spontaneous`.
    pub ratio: f64,
    /// Batch-means standard error of the ratio.
    pub ratio_se: f64,
    /// `n̄ = 1/(e^x − 1)`.
    pub predicted: f64,
}

impl ChannelSplit {
    pub fn z(&self) -> f64 {
        (self.ratio - self.predicted) / self.ratio_se
    }
}

/// Batches used for the channel-ratio standard error.
pub const CHANNEL_BATCHES: usize = 50;

/// Stimulated versus spontaneous emissions over a logged run.
pub fn channel_split(run: &EquilibrationRun) -> Result<ChannelSplit> {
    let log = run.log.as_ref().ok_or_else(|| Error::Config("run was made without keep_log".into()))?;
    if log.len() < CHANNEL_BATCHES * 10 {
        return Err(domain("too few events for a channel split"));
    }
    let size = log.len() / CHANNEL_BATCHES;
    let batches: Vec<(f64, f64)> = log
        .chunks(size)
        .take(CHANNEL_BATCHES)
        .map(|c| {
            c.iter().fold((0.0, 0.0), |(s, p), e| match e.kind {
                EventKind::StimulatedEmission => (s + 1.0, p),
                EventKind::SpontaneousEmission => (s, p + 1.0),
                EventKind::Absorption => (s, p),
            })
        })
        .collect();
    let count = |k: EventKind| log.iter().filter(|e| e.kind == k).count() as u64;
    let (stimulated, spontaneous) = (count(EventKind::StimulatedEmission), count(EventKind::SpontaneousEmission));
    let (bs, bp): (f64, f64) = batches.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let r = bs / bp;
    let nb = batches.len() as f64;
    let resid: f64 = batches.iter().map(|(s, p)| (s - r * p).powi(2)).sum();
    let ratio_se = (nb / (nb - 1.0) * resid).sqrt() / bp;
    Ok(ChannelSplit {
        spontaneous,
        stimulated,
        ratio: stimulated as f64 / spontaneous as f64,
        ratio_se,
        predicted: 1.0 / run.config.x.exp_m1(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cavity_is_frozen() {
        let mut s = CavityState::new(3, 0.0, 1.0).unwrap();
        s.mode_occupations = vec![2, 0, 5];
        let mut r = RateTable::new(&s, 1.0).unwrap();
        let mut rng = stream(1, 0);
        assert_eq!(step_gillespie(&mut s, &mut r, &mut rng), Err(Error::Frozen));
        assert_eq!(s.mode_occupations, vec![2, 0, 5]);
    }

    #[test]
    fn removing_atoms_freezes() {
        let mut s = CavityState::new(2, 10.0, 1.0).unwrap();
        let mut r = RateTable::new(&s, 1.0).unwrap();
        let mut rng = stream(2, 0);
        for _ in 0..100 {
            let before = s.total_quanta();
            let e = step_gillespie(&mut s, &mut r, &mut rng).unwrap();
            assert_eq!(before.abs_diff(s.total_quanta()), 1);
            assert!(e.wait > 0.0);
        }
        s.remove_atoms();
        let mut r = RateTable::new(&s, 1.0).unwrap();
        let frozen = s.clone();
        assert_eq!(step_gillespie(&mut s, &mut r, &mut rng), Err(Error::Frozen));
        assert_eq!(s, frozen);
    }

    #[test]
    fn detailed_balance_ratio_of_rates() {
        let mut s = CavityState::new(1, 7.0, 0.8).unwrap();
        let mut r = RateTable::new(&s, 2.0).unwrap();
        let up0 = r.up[0];
        s.mode_occupations[0] = 1;
        r.update(&s, 0);
        assert!((up0 / r.down[0] - (-0.8f64).exp()).abs() < 1e-14);
        assert!((r.spontaneous(&s, 0) + r.stimulated(&s, 0) - r.up[0]).abs() < 1e-12);
    }

    #[test]
    fn short_run_relaxes_from_concentrated_start() {
        let cfg = EquilibrationConfig {
            modes: 4,
            t_max: 3000.0,
            initial: InitialCondition::Concentrated { quanta: 40 },
            ..Default::default()
        };
        let run = equilibration_run(&cfg).unwrap();
        assert!(run.mean_z().abs() < 4.0, "{}", run.mean_z());
        assert!(run.variance_z().abs() < 4.0, "{}", run.variance_z());
        assert!(mode_homogeneity(&run.histograms).unwrap().p_value > 1e-4);
        assert_eq!(run.tv_checkpoints.len(), 3);
    }
}
