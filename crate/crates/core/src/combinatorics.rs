//! Exact counting of complexions, collocations and associations.
//!
//! `N` receptacles (modes) share `n` quanta. A distribution mode records how
//! many receptacles hold `i` quanta for each `i`. Collocations count the
//! ways to assign those occupancies to distinguishable receptacles (Bose
//! counting); associations further count distinguishable quanta
//! (Maxwell–Boltzmann counting).

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::numerics::inverse_digamma;
use crate::{Error, Result};

/// Default cap on the number of enumerated partitions.
pub const PARTITION_BUDGET: u128 = 1_000_000;

/// `k!` as a big integer.
pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of complexions `W_{N,P} = (N+P−1)!/((N−1)!P!)`.
pub fn planck_w(n_receptacles: u64, quanta: u64) -> Result<BigUint> {
    if n_receptacles == 0 {
        return Err(Error::Domain("need at least one receptacle".into()));
    }
    Ok(binomial(n_receptacles + quanta - 1, quanta))
}

/// Natural logarithm of a big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let shift = x.bits().saturating_sub(64);
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `num/den` rounded to the nearest double, exact for any magnitudes.
pub fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = num.bits() as i64 - den.bits() as i64 - 64;
    let q = if shift >= 0 { num / (den << shift as u64) } else { (num << (-shift) as u64) / den };
    q.to_f64().unwrap_or(f64::INFINITY) * (shift as f64).exp2()
}

/// Occupancy vector: `occupancy_counts[i]` receptacles hold `i` quanta.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistributionMode {
    pub occupancy_counts: Vec<u64>,
    #[serde(rename = "N")]
    pub n_receptacles: u64,
    #[serde(rename = "n")]
    pub quanta: u64,
}

impl DistributionMode {
    /// Check `Σ N_i = N` and `Σ i·N_i = n`.
    pub fn validate(&self) -> Result<()> {
        let receptacles: u64 = self.occupancy_counts.iter().sum();
        let quanta: u64 = self.occupancy_counts.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
        if receptacles != self.n_receptacles || quanta != self.quanta {
            return Err(Error::Invariant(format!(
                "counts give N={receptacles}, n={quanta}; expected N={}, n={}",
                self.n_receptacles, self.quanta
            )));
        }
        Ok(())
    }

    fn from_parts(parts: &[u64], n_receptacles: u64, quanta: u64) -> Self {
        let top = parts.first().copied().unwrap_or(0) as usize;
        let mut counts = vec![0u64; top + 1];
        for &p in parts {
            counts[p as usize] += 1;
        }
        counts[0] = n_receptacles - parts.len() as u64;
        Self { occupancy_counts: counts, n_receptacles, quanta }
    }
}

/// Collocations `A = N!/Π N_i!`.
pub fn count_collocations(d: &DistributionMode) -> Result<BigUint> {
    d.validate()?;
    let den = d.occupancy_counts.iter().fold(BigUint::one(), |acc, &c| acc * factorial(c));
    Ok(factorial(d.n_receptacles) / den)
}

/// Associations `B = n!/Π (i!)^{N_i}`.
pub fn count_associations(d: &DistributionMode) -> Result<BigUint> {
    d.validate()?;
    let den = d
        .occupancy_counts
        .iter()
        .enumerate()
        .fold(BigUint::one(), |acc, (i, &c)| acc * factorial(i as u64).pow(c as u32));
    Ok(factorial(d.quanta) / den)
}

/// Partitions of `n` into at most `max_parts` parts of size at most `max_part`,
/// in reverse lexicographic order.
#[derive(Debug, Clone)]
struct Partitions {
    parts: Vec<u64>,
    max_parts: u64,
    started: bool,
    done: bool,
}

impl Partitions {
    fn new(n: u64, max_parts: u64, max_part: u64) -> Self {
        let max_part = max_part.min(n);
        let feasible = n == 0 || (max_part > 0 && max_parts > 0 && n <= max_parts.saturating_mul(max_part));
        let mut parts = Vec::new();
        if feasible {
            let mut rem = n;
            while rem > 0 {
                let p = max_part.min(rem);
                parts.push(p);
                rem -= p;
            }
        }
        Self { parts, max_parts, started: false, done: !feasible }
    }

    fn advance(&mut self) -> bool {
        let mut rem = 0u64;
        while let Some(last) = self.parts.pop() {
            rem += last;
            if last > 1 {
                let v = last - 1;
                let slots_after = self.max_parts - self.parts.len() as u64 - 1;
                if rem - v <= v.saturating_mul(slots_after) {
                    self.parts.push(v);
                    rem -= v;
                    while rem > 0 {
                        let p = v.min(rem);
                        self.parts.push(p);
                        rem -= p;
                    }
                    return true;
                }
            }
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.parts.clone())
    }
}

/// Iterator over every distribution mode of `n` quanta in `N` receptacles.
#[derive(Debug, Clone)]
pub struct DistributionModes {
    partitions: Partitions,
    n_receptacles: u64,
    quanta: u64,
}

impl Iterator for DistributionModes {
    type Item = DistributionMode;

    fn next(&mut self) -> Option<DistributionMode> {
        self.partitions.next().map(|p| DistributionMode::from_parts(&p, self.n_receptacles, self.quanta))
    }
}

/// Every occupancy vector of `n` quanta in `N` receptacles with at most
/// `p_max` quanta per receptacle, each exactly once.
///
/// Fails with a size error when more than [`PARTITION_BUDGET`] modes exist.
pub fn enumerate_distribution_modes(n_receptacles: u64, quanta: u64, p_max: Option<u64>) -> Result<DistributionModes> {
    enumerate_with_budget(n_receptacles, quanta, p_max, PARTITION_BUDGET)
}

pub fn enumerate_with_budget(
    n_receptacles: u64,
    quanta: u64,
    p_max: Option<u64>,
    budget: u128,
) -> Result<DistributionModes> {
    let max_part = p_max.unwrap_or(quanta);
    let make = || Partitions::new(quanta, n_receptacles, max_part);
    let count = make().take(budget as usize + 1).count() as u128;
    if count > budget {
        return Err(Error::Budget { count, budget });
    }
    Ok(DistributionModes { partitions: make(), n_receptacles, quanta })
}

/// Enumerated sums against their closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    #[serde(rename = "N")]
    pub n_receptacles: u64,
    #[serde(rename = "n")]
    pub quanta: u64,
    #[serde(with = "big_string")]
    pub sum_a: BigUint,
    #[serde(with = "big_string")]
    pub expected_a: BigUint,
    #[serde(with = "big_string")]
    pub sum_ab: BigUint,
    #[serde(with = "big_string")]
    pub expected_ab: BigUint,
    pub pass: bool,
}

mod big_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Σ A = C(N+n−1, n)` and `Σ A·B = Nⁿ` by full enumeration.
pub fn verify_count_identities(n_receptacles: u64, quanta: u64) -> Result<IdentityCheck> {
    let mut sum_a = BigUint::zero();
    let mut sum_ab = BigUint::zero();
    for mode in enumerate_distribution_modes(n_receptacles, quanta, None)? {
        let a = count_collocations(&mode)?;
        sum_ab += &a * count_associations(&mode)?;
        sum_a += a;
    }
    let expected_a = planck_w(n_receptacles, quanta)?;
    let expected_ab = BigUint::from(n_receptacles).pow(quanta as u32);
    let pass = sum_a == expected_a && sum_ab == expected_ab;
    Ok(IdentityCheck { n_receptacles, quanta, sum_a, expected_a, sum_ab, expected_ab, pass })
}

/// Probability that one chosen receptacle holds `level` quanta, as the exact
/// ratio `Σ A·N_level / (N·Σ A)` over enumerated modes.
pub fn level_probability_by_enumeration(n_receptacles: u64, quanta: u64, level: u64) -> Result<(BigUint, BigUint)> {
    let mut num = BigUint::zero();
    let mut total = BigUint::zero();
    for mode in enumerate_distribution_modes(n_receptacles, quanta, None)? {
        let a = count_collocations(&mode)?;
        let at_level = mode.occupancy_counts.get(level as usize).copied().unwrap_or(0);
        num += &a * at_level;
        total += a;
    }
    Ok((num, total * n_receptacles))
}

/// Closed-form equilibrium occupancies `N_i` for `i = 0, 1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeEquilibria {
    pub epsilon_over_kt: f64,
    pub bose_counts: Vec<f64>,
    pub maxwell_counts: Vec<f64>,
}

/// `N_i = N(1−e^{−y})e^{−iy}` and `N_i = N·y·e^{−iy}` with `y = ε/kT`,
/// listed until the Bose count drops below `1e-12·N`.
pub fn lagrange_equilibria(n_receptacles: f64, epsilon_over_kt: f64) -> Result<LagrangeEquilibria> {
    if !(epsilon_over_kt > 0.0 && n_receptacles > 0.0) {
        return Err(Error::Domain("need N > 0 and eps/kT > 0".into()));
    }
    let y = epsilon_over_kt;
    let mut bose_counts = Vec::new();
    let mut maxwell_counts = Vec::new();
    for i in 0.. {
        let w = (-(i as f64) * y).exp();
        let bose = n_receptacles * (-(-y).exp_m1()) * w;
        if bose < 1e-12 * n_receptacles || i > 100_000 {
            break;
        }
        bose_counts.push(bose);
        maxwell_counts.push(n_receptacles * y * w);
    }
    Ok(LagrangeEquilibria { epsilon_over_kt, bose_counts, maxwell_counts })
}

/// Which count the continuous maximization targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `ln A`: Bose counting.
    Collocations,
    /// `ln A + ln B`: Maxwell–Boltzmann counting.
    CollocationsTimesAssociations,
}

/// Maximizer of the chosen objective under `Σ N_i = N`, `Σ i·N_i = n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedMaximum {
    pub objective: Objective,
    pub counts: Vec<f64>,
    /// Lagrange multiplier of the energy constraint (the fitted `ε/kT`).
    pub beta: f64,
    /// `|Σ N_i − N| + |Σ i·N_i − n|`.
    pub constraint_residual: f64,
}

/// Maximize `ln A` (or `ln AB`) on the continuous relaxation with `lnΓ`.
///
/// Stationarity gives `ψ(N_i + 1) + w_i = a − β·i` with `w_i = ln i!` for the
/// association term and zero otherwise. `N_i` is clamped at zero where the
/// stationary value would be negative. The multipliers are found by nested
/// bisection: `a` fixes `Σ N_i = N` for each `β`, then `β` fixes the energy.
pub fn maximize_counts(n_receptacles: f64, quanta: f64, objective: Objective) -> Result<ConstrainedMaximum> {
    if !(n_receptacles > 0.0 && quanta > 0.0) {
        return Err(Error::Domain("need N > 0 and n > 0".into()));
    }
    let max_levels = (quanta as usize + 2).min(200_000);
    let weight = |i: usize| match objective {
        Objective::Collocations => 0.0,
        Objective::CollocationsTimesAssociations => ln_gamma(i as f64 + 1.0),
    };
    let counts_for = |a: f64, beta: f64| -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..max_levels {
            let y = a - beta * i as f64 - weight(i);
            // ψ(1) is the smallest value reachable with N_i ≥ 0.
            if y <= digamma(1.0) {
                break;
            }
            out.push(inverse_digamma(y) - 1.0);
        }
        out
    };
    let total = |c: &[f64]| c.iter().sum::<f64>();
    let energy = |c: &[f64]| c.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>();

    let solve_a = |beta: f64| -> Result<f64> {
        let mut lo = digamma(1.0);
        let mut hi = lo + 1.0;
        while total(&counts_for(hi, beta)) < n_receptacles {
            hi = lo + 2.0 * (hi - lo);
            if hi > 1e6 {
                return Err(Error::NoConvergence("normalization multiplier diverged".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(&counts_for(mid, beta)) < n_receptacles {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let mean_energy = |beta: f64| -> Result<f64> {
        let c = counts_for(solve_a(beta)?, beta);
        Ok(energy(&c))
    };

    // Larger beta lowers the energy. The association weight alone already
    // confines the support, so negative beta is admissible in that case.
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean_energy(hi)? > quanta {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NoConvergence("energy multiplier diverged".into()));
        }
    }
    if objective == Objective::Collocations {
        lo = 1e-12;
    } else {
        while mean_energy(lo)? < quanta {
            lo *= 2.0;
            if lo < -1e4 {
                return Err(Error::NoConvergence("energy multiplier diverged".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_energy(mid)? > quanta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let beta = 0.5 * (lo + hi);
    let counts = counts_for(solve_a(beta)?, beta);
    let constraint_residual = (total(&counts) - n_receptacles).abs() + (energy(&counts) - quanta).abs();
    Ok(ConstrainedMaximum { objective, counts, beta, constraint_residual })
}

/// Largest deviation `max_i |N_i − N_i^{closed}|/N` between two occupancy lists.
pub fn max_scaled_deviation(counts: &[f64], closed: &[f64], n_receptacles: f64) -> f64 {
    let len = counts.len().max(closed.len());
    (0..len)
        .map(|i| (counts.get(i).copied().unwrap_or(0.0) - closed.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
        / n_receptacles
}

/// Poisson occupancies `N·e^{−μ}μⁱ/i!` with `μ = n/N`.
pub fn poisson_counts(n_receptacles: f64, quanta: f64, levels: usize) -> Vec<f64> {
    let mu = quanta / n_receptacles;
    (0..levels).map(|i| n_receptacles * (i as f64 * mu.ln() - mu - ln_gamma(i as f64 + 1.0)).exp()).collect()
}

/// Bose counts at exact comparison with the constrained maximum of `ln A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumComparison {
    #[serde(rename = "N")]
    pub n_receptacles: f64,
    #[serde(rename = "n")]
    pub quanta: f64,
    pub bose_deviation: f64,
    pub bose_beta: f64,
    pub poisson_deviation: f64,
    pub maxwell_closed_form_deviation: f64,
}

/// Maximize both objectives and compare with the closed forms.
///
/// The `ln A` maximizer is compared with the Bose law at `e^{−y} = n/(N+n)`;
/// the `ln AB` maximizer with the Poisson law of mean `n/N` and with the
/// listed Maxwell closed form at the same `y`.
pub fn compare_equilibria(n_receptacles: f64, quanta: f64) -> Result<EquilibriumComparison> {
    let y = ((n_receptacles + quanta) / quanta).ln();
    let closed = lagrange_equilibria(n_receptacles, y)?;
    let bose = maximize_counts(n_receptacles, quanta, Objective::Collocations)?;
    let mb = maximize_counts(n_receptacles, quanta, Objective::CollocationsTimesAssociations)?;
    let levels = mb.counts.len().max(8);
    Ok(EquilibriumComparison {
        n_receptacles,
        quanta,
        bose_deviation: max_scaled_deviation(&bose.counts, &closed.bose_counts, n_receptacles),
        bose_beta: bose.beta,
        poisson_deviation: max_scaled_deviation(
            &mb.counts,
            &poisson_counts(n_receptacles, quanta, levels),
            n_receptacles,
        ),
        maxwell_closed_form_deviation: max_scaled_deviation(&mb.counts, &closed.maxwell_counts, n_receptacles),
    })
}

/// Exclusion counting: at most one quantum per receptacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermiCheck {
    #[serde(rename = "N")]
    pub n_receptacles: u64,
    #[serde(rename = "n")]
    pub quanta: u64,
    pub modes: u64,
    #[serde(with = "big_string")]
    pub sum_a: BigUint,
    #[serde(with = "big_string")]
    pub expected: BigUint,
    pub pass: bool,
}

/// `Σ A = C(N, n)` over occupancies capped at one quantum.
pub fn fermi_variant(n_receptacles: u64, quanta: u64) -> Result<FermiCheck> {
    if quanta > n_receptacles {
        return Err(Error::Exclusion { quanta, receptacles: n_receptacles });
    }
    let mut sum_a = BigUint::zero();
    let mut modes = 0;
    for mode in enumerate_distribution_modes(n_receptacles, quanta, Some(1))? {
        sum_a += count_collocations(&mode)?;
        modes += 1;
    }
    let expected = binomial(n_receptacles, quanta);
    let pass = sum_a == expected;
    Ok(FermiCheck { n_receptacles, quanta, modes, sum_a, expected, pass })
}

/// Capped (exclusion) equilibrium over energy levels `ε_s = 2ˢ·hν`, each
/// with `g` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermiLevels {
    pub cells_per_level: f64,
    /// Fitted `hν/kT` from the energy multiplier.
    pub x_fit: f64,
    /// Mean occupation per cell, `n_s/g`.
    pub occupation: Vec<f64>,
}

/// Maximize `Σ_s ln C(g, n_s)` under a fixed total energy `Σ n_s 2ˢ` (in `hν`).
///
/// The total energy is chosen as `g·Σ 2ˢ/(e^{2ˢx}+1)`, the value belonging
/// to the binary components at `x`, so the maximizer can be compared with
/// those occupations. Stationarity: `ψ(g−n_s+1) − ψ(n_s+1) = β·2ˢ`.
pub fn fermi_levels(cells_per_level: f64, x: f64, levels: usize) -> Result<FermiLevels> {
    if !(cells_per_level >= 1.0 && x > 0.0 && levels > 0) {
        return Err(Error::Domain("need g >= 1, x > 0 and at least one level".into()));
    }
    let g = cells_per_level;
    let energy_of = |occ: &[f64]| occ.iter().enumerate().map(|(s, n)| (1u64 << s) as f64 * n).sum::<f64>();
    let target: f64 = (0..levels).map(|s| g * (1u64 << s) as f64 / (((1u64 << s) as f64 * x).exp() + 1.0)).sum();
    let occupation_at = |rhs: f64| -> f64 {
        // f(n) = ψ(g−n+1) − ψ(n+1) decreases from ψ(g+1)−ψ(1) to ψ(1)−ψ(g+1).
        let f = |n: f64| digamma(g - n + 1.0) - digamma(n + 1.0) - rhs;
        let (mut lo, mut hi) = (0.0, g);
        if f(lo) <= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let occ_for = |beta: f64| -> Vec<f64> { (0..levels).map(|s| occupation_at(beta * (1u64 << s) as f64)).collect() };
    let (mut lo, mut hi) = (1e-9, 1.0);
    while energy_of(&occ_for(hi)) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoConvergence("energy multiplier diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if energy_of(&occ_for(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let occupation = occ_for(beta).into_iter().map(|n| n / g).collect();
    Ok(FermiLevels { cells_per_level: g, x_fit: beta, occupation })
}

/// Exact per-receptacle entropy against its Stirling closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StirlingCheck {
    #[serde(rename = "N")]
    pub n_receptacles: u64,
    #[serde(rename = "P")]
    pub quanta: u64,
    pub exact: f64,
    pub stirling: f64,
    pub relative_error: f64,
}

/// `(1/N)·ln W_{N,P}` against `(1+u)ln(1+u) − u ln u` with `u = P/N`.
pub fn stirling_entropy_check(n_receptacles: u64, quanta: u64) -> Result<StirlingCheck> {
    if n_receptacles == 0 || quanta == 0 {
        return Err(Error::Domain("need N, P >= 1".into()));
    }
    let exact = ln_big(&planck_w(n_receptacles, quanta)?) / n_receptacles as f64;
    let u = quanta as f64 / n_receptacles as f64;
    let stirling = (1.0 + u) * u.ln_1p() - u * u.ln();
    Ok(StirlingCheck { n_receptacles, quanta, exact, stirling, relative_error: (stirling - exact).abs() / stirling })
}

/// `ln(max-term A)/ln(Σ A)` at `N` receptacles and `n` quanta, both via `lnΓ`.
///
/// The maximal term is evaluated at the closed-form Bose occupancies.
pub fn max_term_entropy_ratio(n_receptacles: f64, quanta: f64) -> Result<f64> {
    let y = ((n_receptacles + quanta) / quanta).ln();
    let closed = lagrange_equilibria(n_receptacles, y)?;
    let ln_max = ln_gamma(n_receptacles + 1.0) - closed.bose_counts.iter().map(|c| ln_gamma(c + 1.0)).sum::<f64>();
    let ln_total = ln_gamma(n_receptacles + quanta) - ln_gamma(n_receptacles) - ln_gamma(quanta + 1.0);
    Ok(ln_max / ln_total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(counts: &[u64], n: u64, q: u64) -> DistributionMode {
        DistributionMode { occupancy_counts: counts.to_vec(), n_receptacles: n, quanta: q }
    }

    #[test]
    fn complexions() {
        assert_eq!(planck_w(3, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(planck_w(1, 17).unwrap(), BigUint::one());
        assert_eq!(planck_w(9, 0).unwrap(), BigUint::one());
        assert!(planck_w(0, 3).is_err());
    }

    #[test]
    fn collocation_and_association_examples() {
        let m = mode(&[1, 0, 1], 2, 2);
        assert_eq!(count_collocations(&m).unwrap(), BigUint::from(2u32));
        assert_eq!(count_associations(&m).unwrap(), BigUint::one());
        let m = mode(&[0, 2], 2, 2);
        assert_eq!(count_collocations(&m).unwrap(), BigUint::one());
        assert_eq!(count_associations(&m).unwrap(), BigUint::from(2u32));
        let m = mode(&[4, 0, 0, 1], 5, 3);
        assert_eq!(count_collocations(&m).unwrap(), BigUint::from(5u32));
        assert_eq!(count_associations(&mode(&[3], 3, 0)).unwrap(), BigUint::one());
        assert!(matches!(count_collocations(&mode(&[1, 1], 2, 2)), Err(Error::Invariant(_))));
    }

    #[test]
    fn enumeration_examples() {
        let modes: Vec<_> = enumerate_distribution_modes(2, 2, None).unwrap().collect();
        assert_eq!(modes, vec![mode(&[1, 0, 1], 2, 2), mode(&[0, 2], 2, 2)]);
        assert_eq!(enumerate_distribution_modes(3, 0, None).unwrap().count(), 1);
        let sum_a: BigUint =
            enumerate_distribution_modes(4, 5, None).unwrap().map(|m| count_collocations(&m).unwrap()).sum();
        assert_eq!(sum_a, planck_w(4, 5).unwrap());
    }

    #[test]
    fn enumeration_budget() {
        let err = enumerate_with_budget(100, 100, None, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        // p(100) = 190569292 partitions exceed the default budget.
        assert!(enumerate_distribution_modes(100, 100, None).is_err());
    }

    #[test]
    fn identity_examples() {
        let c = verify_count_identities(2, 2).unwrap();
        assert_eq!((c.sum_a.clone(), c.sum_ab.clone()), (BigUint::from(3u32), BigUint::from(4u32)));
        let c = verify_count_identities(3, 3).unwrap();
        assert_eq!((c.sum_a.clone(), c.sum_ab.clone()), (BigUint::from(10u32), BigUint::from(27u32)));
        let c = verify_count_identities(5, 1).unwrap();
        assert!(c.pass && c.sum_a == BigUint::from(5u32) && c.sum_ab == c.sum_a);
    }

    #[test]
    fn fermi_examples() {
        assert_eq!(fermi_variant(4, 2).unwrap().sum_a, BigUint::from(6u32));
        let full = fermi_variant(5, 5).unwrap();
        assert_eq!((full.modes, full.sum_a), (1, BigUint::one()));
        assert!(matches!(fermi_variant(2, 3), Err(Error::Exclusion { .. })));
    }

    #[test]
    fn fermi_levels_match_binary_occupations() {
        let x = std::f64::consts::LN_2;
        let f = fermi_levels(1e9, x, 5).unwrap();
        assert!((f.x_fit / x - 1.0).abs() < 1e-3, "{}", f.x_fit);
        for (s, occ) in f.occupation.iter().enumerate() {
            let b = 0.5f64.powi(1 << s);
            let p1 = b / (1.0 + b);
            assert!((occ - p1).abs() < 1e-3 * p1.max(1e-3), "s={s}: {occ} vs {p1}");
        }
    }

    #[test]
    fn lagrange_closed_forms() {
        let eq = lagrange_equilibria(1.0, std::f64::consts::LN_2).unwrap();
        for (i, c) in eq.bose_counts.iter().enumerate() {
            assert!((c - 0.5f64.powi(i as i32 + 1)).abs() < 1e-15);
        }
        let eq = lagrange_equilibria(1000.0, 0.3).unwrap();
        assert!((eq.bose_counts.iter().sum::<f64>() - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn constrained_maximum_is_bose() {
        let c = compare_equilibria(1e4, 1e4).unwrap();
        assert!(c.bose_deviation < 1e-3, "{c:?}");
        // The lnΓ relaxation shifts the multiplier slightly off ln 2 at finite N.
        assert!((c.bose_beta / std::f64::consts::LN_2 - 1.0).abs() < 1e-2);
        assert!(c.poisson_deviation < 1e-3, "{c:?}");
    }

    #[test]
    fn stirling_examples() {
        let small = stirling_entropy_check(10, 10).unwrap();
        let oracle = 1.0 - (92_378f64).ln() / (20.0 * std::f64::consts::LN_2);
        assert!((small.relative_error - oracle).abs() < 1e-12);
        assert!(stirling_entropy_check(10_000, 10_000).unwrap().relative_error < 1e-3);
        let dilute = stirling_entropy_check(100_000, 1).unwrap();
        assert!(dilute.exact < 2e-4 && dilute.stirling < 2e-4);
    }

    #[test]
    fn max_term_ratio_tends_to_one() {
        let r: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&n| max_term_entropy_ratio(n, n).unwrap()).collect();
        assert!(r.windows(2).all(|w| (1.0 - w[1]).abs() < (1.0 - w[0]).abs()), "{r:?}");
        assert!((1.0 - r[2]).abs() < 1e-2);
    }

    #[test]
    fn level_probability_matches_counting() {
        for n_rec in 2..=6u64 {
            for q in 0..=6u64 {
                for level in 0..=q {
                    let (num, den) = level_probability_by_enumeration(n_rec, q, level).unwrap();
                    let (pn, pd) = crate::distributions::planck_bose_counting_exact(n_rec, q, level).unwrap();
                    assert_eq!(&num * &pd, &pn * &den, "N={n_rec} n={q} level={level}");
                }
            }
        }
    }

    #[test]
    fn big_ratio_and_log() {
        let a = factorial(300);
        let b = factorial(298);
        assert!((ratio_f64(&a, &b) - 300.0 * 299.0).abs() < 1e-9);
        assert!((ln_big(&a) - ln_gamma(301.0)).abs() < 1e-9);
        assert_eq!(ratio_f64(&BigUint::zero(), &b), 0.0);
    }
}
