//! Quadrature, root finding and finite differences.

use crate::{Error, Result};

// Gauss–Kronrod 7/15 nodes on [-1, 1] (non-negative half, descending).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate falls below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    const MAX_PANELS: usize = 20_000;
    let (v, e) = kronrod_panel(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Evaluation("integrand produced a non-finite value".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature { value, error, evaluations });
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NoConvergence(format!("quadrature error {error:e} after {MAX_PANELS} panels")));
        }
        let worst = panels.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).map(|(i, _)| i).unwrap_or(0);
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (lv, le) = kronrod_panel(&f, pa, mid);
        let (rv, re) = kronrod_panel(&f, mid, pb);
        evaluations += 30;
        panels.push((pa, mid, lv, le));
        panels.push((mid, pb, rv, re));
    }
}

/// Integral of `f` over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    let mapped = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let x = a + t / s;
        let y = f(x) / (s * s);
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    integrate(mapped, 0.0, 1.0, abs_tol, rel_tol)
}

/// Root of `f` in `[lo, hi]` by Newton steps safeguarded with bisection.
///
/// `f(lo)` and `f(hi)` must differ in sign. Stops when `|f| < f_tol` or the
/// bracket collapses below machine resolution.
pub fn newton_bisect<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, f_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Domain(format!("root not bracketed in [{lo}, {hi}]")));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() < f_tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence("newton_bisect exceeded 200 iterations".into()))
}

/// Central first difference with step `h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Five-point central first difference (fourth-order accurate).
pub fn central_diff5<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Central second difference with step `h`.
pub fn second_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Ordinary least squares of `y` on the given regressor columns.
///
/// Returns coefficients and their standard errors, using weights `1/σ²`
/// when `sigma` is given. Solves the normal equations by Gaussian
/// elimination; intended for two or three regressors.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64], sigma: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = columns.len();
    let n = y.len();
    if p == 0 || n < p || columns.iter().any(|c| c.len() != n) {
        return Err(Error::Domain("least squares: inconsistent design".into()));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; n],
    };
    let mut a = vec![vec![0.0; p + p]; p];
    let mut rhs = vec![0.0; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..n).map(|k| w[k] * columns[i][k] * columns[j][k]).sum();
        }
        a[i][p + i] = 1.0;
        rhs[i] = (0..n).map(|k| w[k] * columns[i][k] * y[k]).sum();
    }
    // Gauss–Jordan on [A | I] to get both the solution and the inverse.
    for col in 0..p {
        let pivot = (col..p).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Domain("least squares: singular design".into()));
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        rhs[col] /= d;
        for r in 0..p {
            if r != col {
                let factor = a[r][col];
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= factor * y;
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let residual_scale = if sigma.is_some() {
        1.0
    } else {
        let rss: f64 = (0..n)
            .map(|k| {
                let fit: f64 = (0..p).map(|i| rhs[i] * columns[i][k]).sum();
                (y[k] - fit).powi(2)
            })
            .sum();
        if n > p {
            rss / (n - p) as f64
        } else {
            0.0
        }
    };
    let errors = (0..p).map(|i| (a[i][p + i] * residual_scale).sqrt()).collect();
    Ok((rhs, errors))
}

/// Trigamma function `ψ'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv + inv2 / 2.0 + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

/// Solves `ψ(x) = y` for `x > 0` by Newton's method from Minka's starting point.
pub fn inverse_digamma(y: f64) -> f64 {
    use statrs::function::gamma::digamma;
    let euler = 0.577_215_664_901_532_9;
    let mut x = if y >= -2.22 { y.exp() + 0.5 } else { -1.0 / (y + euler) };
    for _ in 0..50 {
        let step = (digamma(x) - y) / trigamma(x);
        let next = x - step;
        x = if next > 0.0 { next } else { 0.5 * x };
        if step.abs() <= 1e-15 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let q = integrate_to_infinity(|x| (-x * x).exp(), 0.0, 1e-13, 1e-12).unwrap();
        assert!((q.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn newton_bisect_finds_sqrt2() {
        let r = newton_bisect(|x| x * x - 2.0, |x| 2.0 * x, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn unbracketed_root_is_an_error() {
        assert!(newton_bisect(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn weighted_line_fit() {
        let x: Vec<f64> = (1..=5).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x + 0.5 * x * x).collect();
        let (coef, _) = least_squares(&[x.clone(), x.iter().map(|v| v * v).collect()], &y, None).unwrap();
        assert!((coef[0] - 2.0).abs() < 1e-10 && (coef[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn digamma_inverse_round_trip() {
        use statrs::function::gamma::digamma;
        for x in [1e-3, 0.3, 1.0, 2.5, 40.0, 1e5] {
            assert!((inverse_digamma(digamma(x)) / x - 1.0).abs() < 1e-12, "{x}");
        }
        // ψ'(1) = π²/6
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
    }
}
