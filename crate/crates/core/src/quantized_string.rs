//! Field quantization of a vibrating string on a truncated number basis.
//!
//! Modes `n` of a string of length `L` have `k_n = nπ/L` and `ω_n = c·k_n`.
//! The energy of the segment `(0, l)` splits into `(l/L)·H`, the mode-mixing
//! part
//!
//! `Δ = Σ_{n≠m} ħ√(ω_nω_m)·[q_n q_m K'_{nm} + p_n p_m K_{nm}] / 2L`
//!
//! and a fast-oscillating single-mode term. Thermal states are diagonal
//! (phase-averaged) Bose mixtures, so the expectation of `Δ²` only needs the
//! diagonal of `Δ²`, which is computed exactly from the sparse columns of the
//! two halves `Δ₁` (the `qq` sum) and `Δ₂` (the `pp` sum). `[a, a†] = 1`
//! holds only below the cutoff; states are confined to occupations
//! `≤ N_max − 2` so every matrix element used is exact.
//!
//! Units: `ħ`, `c` and `L` are set by [`StringGeometry`]; energies are in
//! units of `ħ` times frequency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::error::domain;
use crate::numerics::{integrate, integrate_to_infinity, least_squares};
use crate::{Error, Result};

/// Dense single-mode operator on the basis `|0⟩ … |N_max⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub dim: usize,
    /// Row-major entries.
    pub matrix: Vec<Complex64>,
    pub mode_index: usize,
}

impl FockOperator {
    pub fn zeros(dim: usize, mode_index: usize) -> Self {
        Self { dim, matrix: vec![Complex64::new(0.0, 0.0); dim * dim], mode_index }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, 0);
        for i in 0..dim {
            m.matrix[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim, self.mode_index);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.matrix[c * self.dim + r] = self.get(r, c).conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d, self.mode_index);
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out.matrix[r * d + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.matrix.iter_mut().zip(&other.matrix).for_each(|(a, b)| *a -= b);
        out
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// `self|n⟩` as a dense column.
    pub fn apply_basis(&self, n: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, n)).collect()
    }
}

/// Truncated annihilation and creation operators on `|0⟩ … |N_max⟩`.
///
/// `[a, a†]` is the identity except the last diagonal entry, which is
/// `−N_max`: the truncation artifact.
pub fn build_ladder(n_max: usize) -> Result<(FockOperator, FockOperator)> {
    if n_max < 2 {
        return Err(domain("cutoff must be at least 2"));
    }
    let dim = n_max + 1;
    let mut a = FockOperator::zeros(dim, 0);
    for n in 1..dim {
        a.matrix[(n - 1) * dim + n] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let ad = a.dagger();
    Ok((a, ad))
}

/// String length, wave speed and `ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringGeometry {
    #[serde(rename = "L")]
    pub length: f64,
    pub c: f64,
    pub hbar: f64,
}

impl Default for StringGeometry {
    fn default() -> Self {
        Self { length: 1.0, c: 1.0, hbar: 1.0 }
    }
}

impl StringGeometry {
    pub fn wavenumber(&self, n: u64) -> f64 {
        n as f64 * PI / self.length
    }

    pub fn omega(&self, n: u64) -> f64 {
        self.c * self.wavenumber(n)
    }
}

/// Default bound on the Bose weight lost above `N_max − 2` in each mode.
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-6;
/// Default bound on the product-space dimension.
pub const DIMENSION_BUDGET: usize = 150_000;

/// Product of diagonal Bose states over a few modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiModeState {
    pub geometry: StringGeometry,
    pub modes: Vec<u64>,
    pub mode_frequencies: Vec<f64>,
    /// Untruncated mean occupations.
    pub n_bars: Vec<f64>,
    /// Per-mode weights on `0..=N_max`, zero above `N_max − 2`, normalized.
    pub weights: Vec<Vec<f64>>,
    pub cutoff: usize,
    /// Largest per-mode Bose weight dropped by the truncation.
    pub leakage: f64,
}

impl MultiModeState {
    /// Thermal state at `kT` (same units as `ħω`); `kT = 0` is the vacuum.
    pub fn thermal(
        modes: &[u64],
        geometry: StringGeometry,
        kt: f64,
        cutoff: usize,
        leakage_bound: f64,
    ) -> Result<Self> {
        if !(kt >= 0.0) {
            return Err(domain("kT must be non-negative"));
        }
        let n_bars = modes
            .iter()
            .map(|&n| if kt == 0.0 { 0.0 } else { 1.0 / (geometry.hbar * geometry.omega(n) / kt).exp_m1() })
            .collect::<Vec<_>>();
        Self::with_occupations(modes, geometry, &n_bars, cutoff, leakage_bound)
    }

    pub fn with_occupations(
        modes: &[u64],
        geometry: StringGeometry,
        n_bars: &[f64],
        cutoff: usize,
        leakage_bound: f64,
    ) -> Result<Self> {
        if modes.is_empty() || modes.len() != n_bars.len() {
            return Err(domain("one occupation per mode is required"));
        }
        if modes.contains(&0) {
            return Err(domain("mode indices start at 1"));
        }
        if cutoff < 2 {
            return Err(domain("cutoff must be at least 2"));
        }
        let safe = cutoff - 2;
        let mut leakage: f64 = 0.0;
        let mut weights = Vec::with_capacity(modes.len());
        for &nb in n_bars {
            if !(nb >= 0.0 && nb.is_finite()) {
                return Err(domain("occupations must be finite and non-negative"));
            }
            let b = nb / (1.0 + nb);
            let dropped = b.powi(safe as i32 + 1);
            leakage = leakage.max(dropped);
            let mut w: Vec<f64> =
                (0..=cutoff).map(|n| if n <= safe { (1.0 - b) * b.powi(n as i32) } else { 0.0 }).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            weights.push(w);
        }
        if leakage > leakage_bound {
            return Err(Error::Leakage { leakage, bound: leakage_bound });
        }
        Ok(Self {
            geometry,
            modes: modes.to_vec(),
            mode_frequencies: modes.iter().map(|&n| geometry.omega(n)).collect(),
            n_bars: n_bars.to_vec(),
            weights,
            cutoff,
            leakage,
        })
    }

    pub fn dimension(&self) -> usize {
        (self.cutoff + 1).pow(self.modes.len() as u32)
    }

    /// `⟨a†a⟩` of mode `k` in the truncated state.
    pub fn mean_number(&self, k: usize) -> f64 {
        self.weights[k].iter().enumerate().map(|(n, w)| n as f64 * w).sum()
    }

    fn mean_square(&self, k: usize) -> f64 {
        self.weights[k].iter().enumerate().map(|(n, w)| (n * n) as f64 * w).sum()
    }

    fn occupations(&self, mut index: usize) -> Vec<usize> {
        let d = self.cutoff + 1;
        (0..self.modes.len())
            .map(|_| {
                let n = index % d;
                index /= d;
                n
            })
            .collect()
    }

    fn stride(&self, k: usize) -> usize {
        (self.cutoff + 1).pow(k as u32)
    }

    /// Weight of basis state `index`.
    fn weight(&self, index: usize) -> f64 {
        self.occupations(index).iter().enumerate().map(|(k, &n)| self.weights[k][n]).product()
    }
}

/// `H = Σ ħω_n(a†a + ½)`, diagonal in the number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub diagonal: Vec<f64>,
}

impl Hamiltonian {
    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut s = self.diagonal.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}

pub fn hamiltonian(state: &MultiModeState) -> Result<Hamiltonian> {
    check_dimension(state, DIMENSION_BUDGET)?;
    let hbar = state.geometry.hbar;
    let diagonal = (0..state.dimension())
        .map(|i| {
            state.occupations(i).iter().zip(&state.mode_frequencies).map(|(&n, w)| hbar * w * (n as f64 + 0.5)).sum()
        })
        .collect();
    Ok(Hamiltonian { diagonal })
}

fn check_dimension(state: &MultiModeState, budget: usize) -> Result<()> {
    let dim = (state.cutoff as f64 + 1.0).powi(state.modes.len() as i32);
    if dim > budget as f64 {
        return Err(Error::Size { dim: dim.min(usize::MAX as f64) as usize, budget });
    }
    Ok(())
}

/// `(K'_{nm}, K_{nm})` for the segment `(0, l)` of a string of length `L`.
pub fn overlap_kernels(n: u64, m: u64, l: f64, length: f64) -> Result<(f64, f64)> {
    if n == 0 || m == 0 || !(l > 0.0 && l < length) {
        return Err(domain("need n, m >= 1 and 0 < l < L"));
    }
    let (resonant, non_resonant) = kernel_parts(n, m, l, length);
    Ok((resonant + non_resonant, resonant - non_resonant))
}

/// `sin((k_n−k_m)l)/(k_n−k_m)` (→ `l` at `n = m`) and `sin((k_n+k_m)l)/(k_n+k_m)`.
fn kernel_parts(n: u64, m: u64, l: f64, length: f64) -> (f64, f64) {
    let kd = (n as f64 - m as f64) * PI / length;
    let ks = (n + m) as f64 * PI / length;
    let resonant = if n == m { l } else { (kd * l).sin() / kd };
    (resonant, (ks * l).sin() / ks)
}

/// Which parts of the overlap kernels enter `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// Only the resonant `sin((k_n−k_m)l)/(k_n−k_m)` part, as in the
    /// continuum evaluation.
    #[default]
    Resonant,
    /// Both parts.
    Full,
}

/// Kernel data for an unordered mode pair (positions in the state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairKernel {
    pub a: usize,
    pub b: usize,
    pub k_prime: f64,
    pub k: f64,
    /// `ħ√(ω_aω_b)/2L`.
    pub g: f64,
}

/// Energy operator of the segment `(0, l)`: the diagonal `(l/L)H`, the mixing
/// part `Δ = Δ₁ + Δ₂` and the dropped single-mode term, all as sparse columns
/// generated on demand.
#[derive(Debug, Clone)]
pub struct SegmentEnergyMatrix {
    pub state: MultiModeState,
    pub segment: f64,
    pub kernels: Vec<PairKernel>,
    /// `(l/L)·H` on the basis.
    pub diagonal_part: Vec<f64>,
    /// `ħω_n·sin(2k_nl)/(2k_n)/2L` per mode.
    pub third_term_coefficients: Vec<f64>,
}

type Column = Vec<(usize, f64)>;

impl SegmentEnergyMatrix {
    pub fn dimension(&self) -> usize {
        self.state.dimension()
    }

    /// `Δ₁|i⟩` and `Δ₂|i⟩`.
    pub fn delta_columns(&self, i: usize) -> (Column, Column) {
        let occ = self.state.occupations(i);
        let top = self.state.cutoff;
        let mut c1 = Vec::with_capacity(4 * self.kernels.len());
        let mut c2 = Vec::with_capacity(4 * self.kernels.len());
        for pk in &self.kernels {
            let (na, nb) = (occ[pk.a], occ[pk.b]);
            let (sa, sb) = (self.state.stride(pk.a), self.state.stride(pk.b));
            for (da, amp_a, sig_a) in steps(na, top) {
                for (db, amp_b, sig_b) in steps(nb, top) {
                    let j = (i as isize + da * sa as isize + db * sb as isize) as usize;
                    let amp = amp_a * amp_b;
                    // Ordered pairs (n,m) and (m,n) contribute equally: factor 2.
                    // q_aq_b = ½(a+a†)(a+a†); p_ap_b = −½(a−a†)(a−a†).
                    c1.push((j, 2.0 * pk.g * pk.k_prime * amp));
                    c2.push((j, -2.0 * pk.g * pk.k * amp * sig_a * sig_b));
                }
            }
        }
        (merge(c1), merge(c2))
    }

    /// Column of the single-mode term `Σ c_n(q_n² − p_n²) = Σ c_n(a_n² + a_n†²)`.
    pub fn third_term_column(&self, i: usize) -> Column {
        let occ = self.state.occupations(i);
        let top = self.state.cutoff;
        let mut col = Vec::new();
        for (k, &coef) in self.third_term_coefficients.iter().enumerate() {
            let n = occ[k];
            let s = self.state.stride(k);
            if n >= 2 {
                col.push((i - 2 * s, coef * ((n * (n - 1)) as f64).sqrt()));
            }
            if n + 2 <= top {
                col.push((i + 2 * s, coef * (((n + 1) * (n + 2)) as f64).sqrt()));
            }
        }
        merge(col)
    }

    /// Largest `|Δ_ij − Δ_ji|` over the whole matrix.
    pub fn max_asymmetry(&self) -> f64 {
        let dim = self.dimension();
        let columns: Vec<HashMap<usize, f64>> = (0..dim)
            .map(|i| {
                let (c1, c2) = self.delta_columns(i);
                let mut m: HashMap<usize, f64> = HashMap::new();
                for (j, v) in c1.into_iter().chain(c2) {
                    *m.entry(j).or_default() += v;
                }
                m
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (i, col) in columns.iter().enumerate() {
            for (&j, &v) in col {
                let back = columns[j].get(&i).copied().unwrap_or(0.0);
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }

    /// Dense `Δ` for small spaces.
    pub fn delta_dense(&self) -> Result<Vec<Vec<f64>>> {
        let dim = self.dimension();
        if dim > 4096 {
            return Err(Error::Size { dim, budget: 4096 });
        }
        let mut m = vec![vec![0.0; dim]; dim];
        #[allow(clippy::needless_range_loop)]
        for i in 0..dim {
            let (c1, c2) = self.delta_columns(i);
            for (j, v) in c1.into_iter().chain(c2) {
                m[j][i] += v;
            }
        }
        Ok(m)
    }
}

/// Ladder steps from occupation `n`: (shift, amplitude/√2, sign of the
/// `a − a†` combination).
fn steps(n: usize, top: usize) -> impl Iterator<Item = (isize, f64, f64)> {
    let down = (n > 0).then(|| (-1, (n as f64 / 2.0).sqrt(), 1.0));
    let up = (n < top).then(|| (1, ((n + 1) as f64 / 2.0).sqrt(), -1.0));
    down.into_iter().chain(up)
}

fn merge(mut col: Column) -> Column {
    col.sort_by_key(|e| e.0);
    let mut out: Column = Vec::with_capacity(col.len());
    for (j, v) in col {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out
}

fn dot(x: &Column, y: &Column) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += x[i].1 * y[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Segment energy operator with the resonant kernels and default budget.
pub fn segment_delta_matrix(state: &MultiModeState, l: f64) -> Result<SegmentEnergyMatrix> {
    segment_delta_matrix_with(state, l, KernelChoice::Resonant, DIMENSION_BUDGET)
}

pub fn segment_delta_matrix_with(
    state: &MultiModeState,
    l: f64,
    kernels: KernelChoice,
    dimension_budget: usize,
) -> Result<SegmentEnergyMatrix> {
    let g = state.geometry;
    if !(l > 0.0 && l < g.length) {
        return Err(domain("need 0 < l < L"));
    }
    check_dimension(state, dimension_budget)?;
    let mut pairs = Vec::new();
    for a in 0..state.modes.len() {
        for b in a + 1..state.modes.len() {
            let (n, m) = (state.modes[a], state.modes[b]);
            if n == m {
                return Err(domain("modes must be distinct"));
            }
            let (res, non) = kernel_parts(n, m, l, g.length);
            let non = if kernels == KernelChoice::Full { non } else { 0.0 };
            pairs.push(PairKernel {
                a,
                b,
                k_prime: res + non,
                k: res - non,
                g: g.hbar * (state.mode_frequencies[a] * state.mode_frequencies[b]).sqrt() / (2.0 * g.length),
            });
        }
    }
    let h = hamiltonian(state)?;
    let third = state
        .modes
        .iter()
        .zip(&state.mode_frequencies)
        .map(|(&n, w)| {
            let k = g.wavenumber(n);
            g.hbar * w * (2.0 * k * l).sin() / (2.0 * k) / (2.0 * g.length)
        })
        .collect();
    Ok(SegmentEnergyMatrix {
        state: state.clone(),
        segment: l,
        kernels: pairs,
        diagonal_part: h.diagonal.iter().map(|e| e * l / g.length).collect(),
        third_term_coefficients: third,
    })
}

/// Thermal, phase-averaged fluctuation of the segment energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationBudget {
    /// Segment energy above the zero point, `(l/L)Σħω_n⟨N_n⟩`.
    pub mean_energy: f64,
    /// `⟨Δ₁² + Δ₂²⟩`.
    pub squares: f64,
    /// `⟨Δ₁Δ₂ + Δ₂Δ₁⟩`.
    pub cross: f64,
    /// Vacuum value of `Δ₁² + Δ₂²`: the `¼` zero-point pieces.
    pub zero_point: f64,
    /// `zero_point + cross`; zero when the pieces cancel.
    pub cancellation_residual: f64,
    /// `⟨Δ²⟩ = squares + cross`.
    pub quantum: f64,
    /// The same from the normal-ordered closed form, no `½` anywhere.
    pub normal_ordered: f64,
    /// `⟨Δ²⟩` with c-number amplitudes and uniform random phases.
    pub classical: f64,
    /// Classical `⟨Δ₁Δ₂ + Δ₂Δ₁⟩`, zero for uniform phases.
    pub classical_cross: f64,
    /// Variance of the dropped single-mode term.
    pub third_term: f64,
    /// Variance of `(l/L)H`.
    pub diagonal_variance: f64,
    pub leakage: f64,
}

/// Phases per mode in the classical average; exact for the trigonometric
/// polynomials that occur.
const PHASE_GRID: usize = 16;

/// Quantum and classical fluctuation of the segment energy.
pub fn phase_averaged_fluctuation(m: &SegmentEnergyMatrix) -> Result<FluctuationBudget> {
    let s = &m.state;
    let dim = m.dimension();
    let (mut squares, mut cross, mut third) = (0.0, 0.0, 0.0);
    for i in 0..dim {
        let w = s.weight(i);
        if w == 0.0 {
            continue;
        }
        let (c1, c2) = m.delta_columns(i);
        squares += w * (dot(&c1, &c1) + dot(&c2, &c2));
        cross += w * 2.0 * dot(&c1, &c2);
        let t = m.third_term_column(i);
        third += w * dot(&t, &t);
    }
    let (c1, c2) = m.delta_columns(0);
    let zero_point = dot(&c1, &c1) + dot(&c2, &c2);

    let ratio = m.segment / s.geometry.length;
    let hbar = s.geometry.hbar;
    let mut mean_energy = 0.0;
    let mut diagonal_variance = 0.0;
    for (k, w) in s.mode_frequencies.iter().enumerate() {
        let e = hbar * w * ratio;
        let nb = s.mean_number(k);
        mean_energy += e * nb;
        diagonal_variance += e * e * (s.mean_square(k) - nb * nb);
    }

    let mut normal_ordered = 0.0;
    let mut classical = 0.0;
    let mut classical_cross = 0.0;
    for pk in &m.kernels {
        let (na, nb) = (s.mean_number(pk.a), s.mean_number(pk.b));
        let g2 = pk.g * pk.g;
        normal_ordered += 4.0 * g2 * (pk.k_prime.powi(2) + pk.k.powi(2)) * (na * nb + 0.5 * (na + nb))
            + g2 * (pk.k_prime - pk.k).powi(2);
        let (sq, cr) = classical_pair(pk, na, nb);
        classical += sq + cr;
        classical_cross += cr;
    }
    Ok(FluctuationBudget {
        mean_energy,
        squares,
        cross,
        zero_point,
        cancellation_residual: zero_point + cross,
        quantum: squares + cross,
        normal_ordered,
        classical,
        classical_cross,
        third_term: third,
        diagonal_variance,
        leakage: s.leakage,
    })
}

/// Phase average of the squared pair term with `a → √N̄·e^{−iφ}`.
///
/// Different pairs share no phase pair, so their cross terms average to zero
/// and the pair sums add.
fn classical_pair(pk: &PairKernel, na: f64, nb: f64) -> (f64, f64) {
    let (ra, rb) = ((2.0 * na).sqrt(), (2.0 * nb).sqrt());
    let (mut sq, mut cr) = (0.0, 0.0);
    for i in 0..PHASE_GRID {
        let pa = TAU * i as f64 / PHASE_GRID as f64;
        let (qa, pa_) = (ra * pa.cos(), -ra * pa.sin());
        for j in 0..PHASE_GRID {
            let pb = TAU * j as f64 / PHASE_GRID as f64;
            let (qb, pb_) = (rb * pb.cos(), -rb * pb.sin());
            let d1 = 2.0 * pk.g * pk.k_prime * qa * qb;
            let d2 = 2.0 * pk.g * pk.k * pa_ * pb_;
            sq += d1 * d1 + d2 * d2;
            cr += 2.0 * d1 * d2;
        }
    }
    let n = (PHASE_GRID * PHASE_GRID) as f64;
    (sq / n, cr / n)
}

/// Fit of budgets at several temperatures to `α·ħω̄·Ē + β·Ē²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFit {
    pub n_bars: Vec<f64>,
    pub budgets: Vec<FluctuationBudget>,
    /// Modes of the segment in the band, `z = (l/L)·Z`.
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `β·z/α`; 1 for the two-term form `hνĒ + Ē²/z`.
    pub shape_ratio: f64,
    /// Largest share of the classical budget not explained by `Ē²` alone.
    pub classical_particle_share: f64,
}

/// Budgets over a set of common mean occupations and the two-term fit.
pub fn fit_two_term_shape(
    modes: &[u64],
    geometry: StringGeometry,
    l: f64,
    n_bars: &[f64],
    cutoff: usize,
    leakage_bound: f64,
) -> Result<ShapeFit> {
    if n_bars.len() < 2 {
        return Err(domain("need at least two occupations"));
    }
    let omega_bar = modes.iter().map(|&n| geometry.omega(n)).sum::<f64>() / modes.len() as f64;
    let hw = geometry.hbar * omega_bar;
    let mut budgets = Vec::new();
    for &nb in n_bars {
        // Same temperature for every mode, set by the band centre.
        let kt = hw / (1.0 / nb).ln_1p();
        let state = MultiModeState::thermal(modes, geometry, kt, cutoff, leakage_bound)?;
        budgets.push(phase_averaged_fluctuation(&segment_delta_matrix(&state, l)?)?);
    }
    let e: Vec<f64> = budgets.iter().map(|b| hw * b.mean_energy).collect();
    let e2: Vec<f64> = budgets.iter().map(|b| b.mean_energy.powi(2)).collect();
    let q: Vec<f64> = budgets.iter().map(|b| b.quantum).collect();
    let (coef, _) = least_squares(&[e.clone(), e2.clone()], &q, None)?;
    let z = l / geometry.length * modes.len() as f64;
    let qc: Vec<f64> = budgets.iter().map(|b| b.classical).collect();
    let (cc, _) = least_squares(&[e.clone(), e2], &qc, None)?;
    let classical_particle_share =
        budgets.iter().zip(&e).map(|(b, ei)| (cc[0] * ei / b.classical).abs()).fold(0.0, f64::max);
    Ok(ShapeFit {
        n_bars: n_bars.to_vec(),
        budgets,
        z,
        alpha: coef[0],
        beta: coef[1],
        shape_ratio: coef[1] * z / coef[0],
        classical_particle_share,
    })
}

/// How well `(c/πl)·sin²[(ω−ω')l/c]/(ω−ω')²` reproduces `f(ω)` under the
/// integral over all `ω'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelLimit {
    pub l: f64,
    pub max_deviation: f64,
    pub deviations: Vec<f64>,
}

/// Panels of width `π` in `u = (ω'−ω)l/c` are integrated out to this `|u|`;
/// beyond it `sin²u` is replaced by its mean `½`, an error below
/// `sup|f|/(4πU²)`.
const KERNEL_PANEL_LIMIT: f64 = 10_000.0;

fn kernel_integral<F: Fn(f64) -> f64>(f: &F, omega: f64, l: f64, c: f64, lower: Option<f64>) -> Result<f64> {
    let scale = c / l;
    let g = |u: f64| {
        let s = if u == 0.0 { 1.0 } else { (u.sin() / u).powi(2) };
        s * f(omega + u * scale) / PI
    };
    let u_min = lower.map(|w| (w - omega) / scale).unwrap_or(f64::NEG_INFINITY);
    let limit = KERNEL_PANEL_LIMIT;
    let start = u_min.max(-limit);
    let mut total = 0.0;
    let first = (start / PI).floor() as i64 + 1;
    let last = (limit / PI).ceil() as i64 - 1;
    let mut a = start;
    for k in first..=last {
        let b = k as f64 * PI;
        if b > a {
            total += integrate(g, a, b, 1e-13, 1e-10)?.value;
            a = b;
        }
    }
    total += integrate(g, a, limit, 1e-13, 1e-10)?.value;
    let tail = |u: f64| f(omega + u * scale) / (2.0 * PI * u * u);
    total += integrate_to_infinity(tail, limit, 1e-13, 1e-10)?.value;
    if u_min < -limit {
        total += integrate_to_infinity(|u: f64| tail(-u), limit, 1e-13, 1e-10)?.value;
    }
    Ok(total)
}

/// Deviation `|∫K(ω,ω')f(ω')dω' − f(ω)|` over `omega_grid`.
pub fn kernel_delta_limit<F: Fn(f64) -> f64>(l: f64, c: f64, omega_grid: &[f64], f: F) -> Result<KernelLimit> {
    if !(l > 0.0 && c > 0.0) {
        return Err(domain("l and c must be positive"));
    }
    let deviations = omega_grid
        .iter()
        .map(|&w| Ok((kernel_integral(&f, w, l, c, None)? - f(w)).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(KernelLimit { l, max_deviation: deviations.iter().copied().fold(0.0, f64::max), deviations })
}

/// `∫₀^∞ K(ω,ω')dω'`, the kernel mass on physical frequencies.
pub fn kernel_mass_positive(l: f64, c: f64, omega: f64) -> Result<f64> {
    if !(l > 0.0 && c > 0.0 && omega > 0.0) {
        return Err(domain("l, c and omega must be positive"));
    }
    kernel_integral(&|_| 1.0, omega, l, c, Some(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_commutator_and_vacuum() {
        let (a, ad) = build_ladder(5).unwrap();
        let c = a.commutator(&ad);
        for n in 0..5 {
            assert!((c.get(n, n).re - 1.0).abs() < 1e-12);
        }
        assert!((c.get(5, 5).re + 5.0).abs() < 1e-12);
        assert!(a.apply_basis(0).iter().all(|z| z.norm() == 0.0));
        let num = ad.mul(&a);
        for n in 0..=5 {
            assert!((num.get(n, n).re - n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_spectra() {
        let g = StringGeometry { length: PI, ..Default::default() };
        let one = MultiModeState::thermal(&[1], g, 0.0, 6, 1.0).unwrap();
        let s = hamiltonian(&one).unwrap().spectrum();
        assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] - 1.5).abs() < 1e-12 && (s[2] - 2.5).abs() < 1e-12);
        let two = MultiModeState::thermal(&[1, 2], g, 0.0, 4, 1.0).unwrap();
        assert!((hamiltonian(&two).unwrap().spectrum()[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn kernels_at_coincidence_and_symmetry() {
        let (l, big_l) = (0.3, 1.0);
        let (kp, k) = overlap_kernels(7, 7, l, big_l).unwrap();
        let kn = 7.0 * PI;
        assert!((kp - (l + (2.0 * kn * l).sin() / (2.0 * kn))).abs() < 1e-14);
        assert!((k - (l - (2.0 * kn * l).sin() / (2.0 * kn))).abs() < 1e-14);
        assert_eq!(overlap_kernels(7, 9, l, big_l).unwrap(), overlap_kernels(9, 7, l, big_l).unwrap());
    }

    #[test]
    fn single_mode_has_no_mixing() {
        let s = MultiModeState::with_occupations(&[50], StringGeometry::default(), &[1.0], 12, 1e-3).unwrap();
        let m = segment_delta_matrix(&s, 0.3).unwrap();
        assert!((0..m.dimension()).all(|i| m.delta_columns(i).0.is_empty()));
    }

    #[test]
    fn two_modes_only_cross_blocks_and_symmetric() {
        let s =
            MultiModeState::with_occupations(&[200, 201], StringGeometry::default(), &[1.0, 1.0], 12, 1e-3).unwrap();
        let m = segment_delta_matrix_with(&s, 0.3, KernelChoice::Full, DIMENSION_BUDGET).unwrap();
        for i in 0..m.dimension() {
            let oi = s.occupations(i);
            let (c1, c2) = m.delta_columns(i);
            for (j, _) in c1.iter().chain(&c2) {
                let oj = s.occupations(*j);
                assert!(oi[0] != oj[0] && oi[1] != oj[1]);
            }
        }
        assert!(m.max_asymmetry() < 1e-12);
    }

    #[test]
    fn zero_point_pieces_cancel() {
        let s =
            MultiModeState::with_occupations(&[200, 201], StringGeometry::default(), &[1.0, 1.0], 12, 1e-3).unwrap();
        let b = phase_averaged_fluctuation(&segment_delta_matrix(&s, 0.3).unwrap()).unwrap();
        assert!(b.cancellation_residual.abs() < 1e-10 * b.zero_point, "{b:?}");
        assert!((b.quantum - b.normal_ordered).abs() < 1e-12 * b.quantum);
        let vac = MultiModeState::thermal(&[200, 201], StringGeometry::default(), 0.0, 12, 1e-3).unwrap();
        let v = phase_averaged_fluctuation(&segment_delta_matrix(&vac, 0.3).unwrap()).unwrap();
        assert!(v.quantum.abs() < 1e-14);
    }

    #[test]
    fn leakage_and_size_guards() {
        let g = StringGeometry::default();
        assert!(matches!(
            MultiModeState::with_occupations(&[10, 11], g, &[1.0, 1.0], 12, DEFAULT_LEAKAGE_BOUND),
            Err(Error::Leakage { .. })
        ));
        let s = MultiModeState::with_occupations(&[10, 11, 12, 13, 14], g, &[0.01; 5], 16, 1.0).unwrap();
        assert!(matches!(segment_delta_matrix(&s, 0.3), Err(Error::Size { .. })));
    }

    #[test]
    fn kernel_normalization_and_convergence() {
        let flat = kernel_delta_limit(50.0, 1.0, &[10.0], |_| 1.0).unwrap();
        assert!(flat.max_deviation < 1e-8, "{flat:?}");
        assert!((kernel_mass_positive(1.0, 1.0, 2e3).unwrap() - 1.0).abs() < 1e-3);
        let f = |w: f64| (-(w - 10.0).powi(2) / 2.0).exp();
        let d1 = kernel_delta_limit(20.0, 1.0, &[10.0], f).unwrap().max_deviation;
        let d2 = kernel_delta_limit(40.0, 1.0, &[10.0], f).unwrap().max_deviation;
        assert!((d1 / d2 - 2.0).abs() < 0.1, "{d1} {d2}");
    }

    #[test]
    fn two_term_shape_and_classical_wave_only() {
        let fit =
            fit_two_term_shape(&[200, 201], StringGeometry::default(), 0.3, &[0.1, 0.25, 0.5, 1.0], 16, 1e-3).unwrap();
        assert!((fit.shape_ratio - 1.0).abs() < 0.05, "{}", fit.shape_ratio);
        assert!(fit.classical_particle_share < 0.05);
        let b = fit.budgets[3];
        assert!(b.classical_cross.abs() < 1e-12 * b.classical);
        assert!(b.third_term < 0.01 * b.quantum, "{} {}", b.third_term, b.quantum);
    }

    #[test]
    fn cutoff_convergence() {
        let g = StringGeometry::default();
        let budget = |cut| {
            let s = MultiModeState::with_occupations(&[200, 201], g, &[1.0, 1.0], cut, 1e-2).unwrap();
            phase_averaged_fluctuation(&segment_delta_matrix(&s, 0.3).unwrap()).unwrap().quantum
        };
        let (a, b) = (budget(12), budget(16));
        assert!((a - b).abs() < 0.01 * b, "{a} {b}");
    }
}
