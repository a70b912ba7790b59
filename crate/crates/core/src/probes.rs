//! Lower-bound probes `B(m₀; ψ, ψ′) = |ω_{ψ′}(â(m₀)) − ω_ψ(â(m₀))|` and the
//! estimates behind their growth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_theta, Error, Result};
use crate::states::{MoyalPureState, StateSpec};
use crate::zeta;

/// ζ cutoff used at probe point `m₀` is `CUTOFF_FACTOR · m₀`.
pub const CUTOFF_FACTOR: u64 = 100;

/// Decades of the grid (counted down from its top) used by default for the fit.
pub const DEFAULT_FIT_DECADES: f64 = 1.5;

/// Relative rounding slack for the elementary inequalities, which become equalities at `α = 1`.
const ROUNDING_SLACK: f64 = 4.0 * f64::EPSILON;

/// `u(m, m₀) = Σ_{k=m}^{m₀} 1/√(k+1)`.
pub fn u_seq(m: u64, m0: u64) -> Result<f64> {
    if m > m0 {
        return Err(Error::InvalidParameter(format!("u(m, m0) needs m <= m0, got {m} > {m0}")));
    }
    Ok((m..=m0).rev().map(|k| 1.0 / ((k + 1) as f64).sqrt()).sum())
}

fn check_exponents(s1: f64, s2: f64) -> Result<()> {
    if 1.0 < s1 && s1 < s2 && s2 <= 1.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("need 1 < s1 < s2 <= 3/2, got ({s1}, {s2})")))
    }
}

/// `G_{s₁,s₂}(m) = 1/(ζ(s₁)(m+1)^{s₁}) − 1/(ζ(s₂)(m+1)^{s₂})`.
pub fn g_seq(m: u64, s1: f64, s2: f64) -> Result<f64> {
    check_exponents(s1, s2)?;
    Ok(g_unchecked(m, s1, s2, zeta::zeta(s1), zeta::zeta(s2)))
}

fn g_unchecked(m: u64, s1: f64, s2: f64, z1: f64, z2: f64) -> f64 {
    let x = (m + 1) as f64;
    1.0 / (z1 * x.powf(s1)) - 1.0 / (z2 * x.powf(s2))
}

/// Last index `M` with `G_{s₁,s₂}(m) ≤ 0` on `[0, M]`; `G > 0` beyond it.
pub fn crossover_index(s1: f64, s2: f64) -> Result<u64> {
    check_exponents(s1, s2)?;
    let (z1, z2) = (zeta::zeta(s1), zeta::zeta(s2));
    // G(m) ≤ 0  ⇔  (m+1)^{s₂−s₁} ≤ ζ(s₁)/ζ(s₂)
    let root = ((z1 / z2).ln() / (s2 - s1)).exp();
    if !(root.is_finite() && root < 2f64.powi(52)) {
        return Err(Error::InvalidParameter(format!(
            "crossover index for ({s1}, {s2}) exceeds the representable range"
        )));
    }
    let mut m = (root.floor() as u64).saturating_sub(1);
    let g = |m: u64| g_unchecked(m, s1, s2, z1, z2);
    while m > 0 && g(m) > 0.0 {
        m -= 1;
    }
    while g(m + 1) <= 0.0 {
        m += 1;
    }
    Ok(m)
}

/// `α = −Σ_{m ≤ M} G_{s₁,s₂}(m)` at the crossover index.
pub fn crossover_mass(s1: f64, s2: f64) -> Result<f64> {
    let big_m = crossover_index(s1, s2)?;
    let (z1, z2) = (zeta::zeta(s1), zeta::zeta(s2));
    Ok(-(0..=big_m).rev().map(|m| g_unchecked(m, s1, s2, z1, z2)).sum::<f64>())
}

/// `B(m₀) = √(θ/2) |Σ_{m ≤ m₀} u(m, m₀) (|c′_m|² − |c_m|²)|`, by suffix sums.
pub fn bound_b(m0: u64, s1: &MoyalPureState, s2: &MoyalPureState) -> Result<f64> {
    check_theta(s1.theta(), s2.theta())?;
    let mut u = 0.0;
    let mut acc = 0.0;
    for m in (0..=m0 as usize).rev() {
        u += 1.0 / ((m + 1) as f64).sqrt();
        acc += u * (s2.weight(m) - s1.weight(m));
    }
    Ok((s1.theta() / 2.0).sqrt() * acc.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// `√(m₀+2) − √(m+1) ≤ ½ Σ_{k=m}^{m₀} 1/√(k+1)`
    SqrtSumLower,
    /// `½ Σ_{k=m}^{m₀} 1/√(k+1) ≤ √(m₀+1) − √m`
    SqrtSumUpper,
    /// `(A+1)^{1−s} − (m₀+2)^{1−s} ≤ (s−1) Σ_{m=A}^{m₀} (m+1)^{−s}`
    ZetaTailLower,
    /// `(s−1) Σ_{m=A}^{m₀} (m+1)^{−s} ≤ A^{1−s} − (m₀+1)^{1−s}`, for `A ≥ 1`
    ZetaTailUpper,
    /// `α k^{α−1} ≥ (k+1)^α − k^α ≥ α (k+1)^{α−1}` for `α ∈ (0, 1]`
    MeanValueConcave,
    /// `α k^{α−1} ≤ (k+1)^α − k^α ≤ α (k+1)^{α−1}` for `α < 0`
    MeanValueNegative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: EstimateKind,
    /// The grid point, e.g. `(m, m₀)`, `(s, A, m₀)` or `(α, k)`.
    pub point: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateGrid {
    pub m0_max: u64,
    pub points_per_decade: usize,
    pub exponents: Vec<f64>,
    pub k_max: u64,
    /// Exponents for the concave mean-value check; `1 − s` for each `s` feeds the negative one.
    pub concave_alphas: Vec<f64>,
}

impl Default for EstimateGrid {
    fn default() -> Self {
        Self {
            m0_max: 10_000,
            points_per_decade: 12,
            exponents: vec![1.01, 1.1, 1.25, 1.5],
            k_max: 10_000,
            concave_alphas: vec![0.1, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub checks: usize,
    pub violations: Vec<Violation>,
}

/// `0..=10` followed by geometric samples up to `max`.
pub fn geometric_grid(max: u64, points_per_decade: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (0..=max.min(10)).collect();
    if max > 10 {
        let decades = (max as f64).log10();
        let steps = (decades * points_per_decade as f64).ceil() as usize;
        for j in 0..=steps {
            let v = 10f64.powf(j as f64 / points_per_decade as f64).round() as u64;
            out.push(v.min(max));
        }
        out.push(max);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `(k+1)^α − k^α` without cancellation.
fn forward_difference(k: f64, alpha: f64) -> f64 {
    k.powf(alpha) * (alpha * (1.0 / k).ln_1p()).exp_m1()
}

fn ordered(lower: f64, upper: f64) -> bool {
    lower <= upper + ROUNDING_SLACK * lower.abs().max(upper.abs())
}

/// Evaluates the elementary estimates on the grid; violations are returned as data.
pub fn estimate_checks(grid: &EstimateGrid) -> EstimateReport {
    let mut checks = 0;
    let mut violations = Vec::new();
    let mut record = |kind, point: Vec<f64>, lower: f64, upper: f64| {
        checks += 1;
        if !ordered(lower, upper) {
            violations.push(Violation { kind, point, lower, upper });
        }
    };

    let samples = geometric_grid(grid.m0_max, grid.points_per_decade);
    for &m0 in &samples {
        for &m in samples.iter().take_while(|&&m| m < m0) {
            let half_sum = 0.5 * u_seq(m, m0).expect("m < m0");
            let p = vec![m as f64, m0 as f64];
            record(EstimateKind::SqrtSumLower, p.clone(), ((m0 + 2) as f64).sqrt() - ((m + 1) as f64).sqrt(), half_sum);
            record(EstimateKind::SqrtSumUpper, p, half_sum, ((m0 + 1) as f64).sqrt() - (m as f64).sqrt());
        }
    }

    for &s in &grid.exponents {
        for &m0 in &samples {
            for &a in samples.iter().take_while(|&&a| a < m0) {
                let sum: f64 = (a..=m0).rev().map(|m| ((m + 1) as f64).powf(-s)).sum();
                let mid = (s - 1.0) * sum;
                let p = vec![s, a as f64, m0 as f64];
                let e = 1.0 - s;
                record(EstimateKind::ZetaTailLower, p.clone(), ((a + 1) as f64).powf(e) - ((m0 + 2) as f64).powf(e), mid);
                if a >= 1 {
                    record(EstimateKind::ZetaTailUpper, p, mid, (a as f64).powf(e) - ((m0 + 1) as f64).powf(e));
                }
            }
        }
    }

    let ks = geometric_grid(grid.k_max, grid.points_per_decade);
    for &k in ks.iter().filter(|&&k| k >= 1) {
        let kf = k as f64;
        for &alpha in &grid.concave_alphas {
            let d = forward_difference(kf, alpha);
            let p = vec![alpha, kf];
            record(EstimateKind::MeanValueConcave, p.clone(), d, alpha * kf.powf(alpha - 1.0));
            record(EstimateKind::MeanValueConcave, p, alpha * (kf + 1.0).powf(alpha - 1.0), d);
        }
        for &s in &grid.exponents {
            let alpha = 1.0 - s;
            let d = forward_difference(kf, alpha);
            let p = vec![alpha, kf];
            record(EstimateKind::MeanValueNegative, p.clone(), alpha * kf.powf(alpha - 1.0), d);
            record(EstimateKind::MeanValueNegative, p, d, alpha * (kf + 1.0).powf(alpha - 1.0));
        }
    }
    EstimateReport { checks, violations }
}

/// Ordinary least squares `y = a + b x`; returns `b`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSeries {
    pub state_a: StateSpec,
    pub state_b: StateSpec,
    pub theta: f64,
    pub m0_grid: Vec<u64>,
    pub b_values: Vec<f64>,
    pub fitted_slope: f64,
    pub fit_window: (u64, u64),
    pub theory_slope: f64,
    pub gap: f64,
    /// True only when the pair falls under the divergence theory and the fit grows.
    pub divergence: bool,
}

impl ProbeSeries {
    /// Rows `m0, B, ln m0, ln B`.
    pub fn rows(&self) -> impl Iterator<Item = (u64, f64, f64, f64)> + '_ {
        self.m0_grid.iter().zip(&self.b_values).map(|(&m, &b)| (m, b, (m as f64).ln(), b.ln()))
    }
}

fn zeta_exponent(spec: &StateSpec) -> Option<f64> {
    match spec {
        StateSpec::Zeta { s, .. } => Some(*s),
        _ => None,
    }
}

/// `(theory slope, whether a divergence claim is allowed)` for a pair.
pub fn pair_theory(a: &StateSpec, b: &StateSpec) -> (f64, bool) {
    let in_range = |s: f64| s > 1.0 && s <= 1.5;
    match (zeta_exponent(a), zeta_exponent(b)) {
        (None, None) => (0.0, false),
        (Some(s), None) | (None, Some(s)) => ((1.5 - s).max(0.0), in_range(s)),
        (Some(x), Some(y)) => {
            let (s1, s2) = if x <= y { (x, y) } else { (y, x) };
            if s1 == s2 {
                return (0.0, false);
            }
            let excluded = s1 == 1.25 && s2 == 1.5;
            ((1.5 - s1).max(0.0), in_range(s1) && in_range(s2) && !excluded)
        }
    }
}

/// Default fit window: the top [`DEFAULT_FIT_DECADES`] decades of the grid.
pub fn default_window(grid: &[u64], decades: f64) -> (u64, u64) {
    let top = grid.iter().copied().max().unwrap_or(0);
    let low = (top as f64 / 10f64.powf(decades)).ceil() as u64;
    (low, top)
}

/// Computes `B` on the grid (ζ cutoff `100·m₀` per point) and fits `ln B` against `ln m₀`.
pub fn asymptotic_fit(
    pair: (&StateSpec, &StateSpec),
    theta: f64,
    m0_grid: &[u64],
    fit_window: Option<(u64, u64)>,
) -> Result<ProbeSeries> {
    let (a, b) = pair;
    let b_values = m0_grid
        .par_iter()
        .map(|&m0| {
            let cutoff = CUTOFF_FACTOR * m0.max(1);
            let sa = a.build_with_cutoff(theta, cutoff)?;
            let sb = b.build_with_cutoff(theta, cutoff)?;
            bound_b(m0, &sa, &sb)
        })
        .collect::<Result<Vec<f64>>>()?;

    let window = fit_window.unwrap_or_else(|| default_window(m0_grid, DEFAULT_FIT_DECADES));
    let (xs, ys): (Vec<f64>, Vec<f64>) = m0_grid
        .iter()
        .zip(&b_values)
        .filter(|(&m, _)| m >= window.0 && m <= window.1)
        .map(|(&m, &v)| ((m as f64).ln(), v.ln()))
        .unzip();
    if xs.len() < 2 || ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonPositiveWindow);
    }
    let fitted_slope = least_squares_slope(&xs, &ys);
    let (theory_slope, eligible) = pair_theory(a, b);
    Ok(ProbeSeries {
        state_a: a.clone(),
        state_b: b.clone(),
        theta,
        m0_grid: m0_grid.to_vec(),
        b_values,
        fitted_slope,
        fit_window: window,
        theory_slope,
        gap: fitted_slope - theory_slope,
        divergence: eligible && fitted_slope > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{basis_state, finite_state, zeta_state};
    use num_complex::Complex64;

    #[test]
    fn u_values() {
        assert_eq!(u_seq(0, 0).unwrap(), 1.0);
        let want = 1.0 / 2f64.sqrt() + 1.0 / 3f64.sqrt() + 0.5;
        assert!((u_seq(1, 3).unwrap() - want).abs() < 1e-15);
        assert!((want - 1.7845).abs() < 1e-4);
        assert!(u_seq(4, 3).is_err());
    }

    #[test]
    fn two_state_example() {
        let theta = 1.3;
        let a = basis_state(0, theta).unwrap();
        let b = finite_state(&[Complex64::new(3f64.sqrt() / 2.0, 0.0), Complex64::new(0.5, 0.0)], theta).unwrap();
        let got = bound_b(1, &a, &b).unwrap();
        assert!((got - (theta / 2.0).sqrt() * 0.25).abs() < 1e-15);
        assert_eq!(bound_b(5, &b, &b).unwrap(), 0.0);
    }

    #[test]
    fn zeta_pair_matches_direct_sum() {
        let theta = 1.0;
        let s = 1.2;
        let cutoff = 500;
        let a = basis_state(0, theta).unwrap();
        let z = zeta_state(s, cutoff, theta).unwrap();
        let partial: f64 = (1..=cutoff).map(|j| (j as f64).powf(-s)).sum();
        for m0 in [0u64, 3, 40] {
            let mut direct = 0.0;
            for m in 0..=m0 {
                let u: f64 = (m..=m0).map(|k| 1.0 / ((k + 1) as f64).sqrt()).sum();
                let delta = 1.0 / (partial * ((m + 1) as f64).powf(s)) - if m == 0 { 1.0 } else { 0.0 };
                direct += u * delta;
            }
            let want = (theta / 2.0f64).sqrt() * direct.abs();
            assert!((bound_b(m0, &a, &z).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn g_sign_change() {
        for (s1, s2) in [(1.1, 1.4), (1.05, 1.5), (1.2, 1.3), (1.3, 1.5), (1.25, 1.26)] {
            let m = crossover_index(s1, s2).unwrap();
            assert!(g_seq(m, s1, s2).unwrap() <= 0.0);
            assert!(g_seq(m + 1, s1, s2).unwrap() > 0.0);
            for j in 0..m.min(2000) {
                assert!(g_seq(j, s1, s2).unwrap() <= 0.0);
            }
        }
        assert!(g_seq(0, 1.4, 1.1).is_err());
        assert!(crossover_index(1.2, 1.6).is_err());
    }

    #[test]
    fn crossover_against_scan() {
        let (s1, s2) = (1.1, 1.4);
        let (z1, z2) = (zeta::zeta(s1), zeta::zeta(s2));
        let scan = (0u64..).find(|&m| g_unchecked(m + 1, s1, s2, z1, z2) > 0.0).unwrap();
        assert_eq!(crossover_index(s1, s2).unwrap(), scan);
        let r = (z1 / z2).powf(1.0 / (s2 - s1));
        assert!((scan as f64 - (r.ceil() - 1.0)).abs() <= 1.0);
    }

    #[test]
    fn crossover_mass_balances_tail() {
        let (s1, s2) = (1.3, 1.5);
        let alpha = crossover_mass(s1, s2).unwrap();
        assert!(alpha > 0.0);
        let m = crossover_index(s1, s2).unwrap();
        // tail Σ_{m>M} G from exact ζ values of the complementary partial sums
        let head = |s: f64| zeta::partial_sum(s, m + 1) / zeta::zeta(s);
        let tail = (1.0 - head(s1)) - (1.0 - head(s2));
        assert!((tail - alpha).abs() < 1e-10, "{tail} vs {alpha}");
    }

    #[test]
    fn worked_estimates() {
        let lower = 5f64.sqrt() - 1.0;
        let mid = 0.5 * u_seq(0, 3).unwrap();
        assert!((lower - 1.2361).abs() < 1e-4 && (mid - 1.3923).abs() < 1e-4);
        assert!(lower <= mid && mid <= 2.0);
        let d = forward_difference(4.0, 0.5);
        assert!((d - (5f64.sqrt() - 2.0)).abs() < 1e-15);
        assert!(0.25 >= d && d >= 0.5 / 5f64.sqrt());
    }

    #[test]
    fn grid_estimates_hold() {
        let small = EstimateGrid { m0_max: 500, k_max: 500, ..EstimateGrid::default() };
        let report = estimate_checks(&small);
        assert!(report.checks > 1000);
        assert!(report.violations.is_empty(), "{:?}", &report.violations[..report.violations.len().min(5)]);
    }

    #[test]
    fn grid_shape() {
        let g = geometric_grid(1000, 4);
        assert_eq!(&g[..11], &(0..=10).collect::<Vec<_>>()[..]);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(geometric_grid(3, 4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn fit_recovers_power_law() {
        let x: Vec<f64> = (1..20).map(|i| (i as f64).ln()).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v + 3.0).collect();
        assert!((least_squares_slope(&x, &y) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn pair_theory_rules() {
        let z = |s| StateSpec::Zeta { s, cutoff: None };
        let b0 = StateSpec::Basis { m: 0 };
        assert_eq!(pair_theory(&z(1.2), &b0), (1.5 - 1.2, true));
        assert_eq!(pair_theory(&b0, &z(1.2)), (1.5 - 1.2, true));
        assert!(!pair_theory(&z(1.25), &z(1.5)).1);
        assert!(!pair_theory(&z(1.5), &z(1.25)).1);
        assert!(pair_theory(&z(1.1), &z(1.3)).1);
        assert!(!pair_theory(&z(1.7), &b0).1);
        assert!(!pair_theory(&b0, &StateSpec::Basis { m: 2 }).1);
    }

    #[test]
    fn identical_pair_refuses_fit() {
        let z = StateSpec::Zeta { s: 1.2, cutoff: None };
        let r = asymptotic_fit((&z, &z), 1.0, &[10, 100, 1000], None);
        assert!(matches!(r, Err(Error::NonPositiveWindow)));
    }

    #[test]
    fn short_fit_grows() {
        let z = StateSpec::Zeta { s: 1.2, cutoff: None };
        let b0 = StateSpec::Basis { m: 0 };
        let grid = geometric_grid(20_000, 6).into_iter().filter(|&m| m >= 100).collect::<Vec<_>>();
        let series = asymptotic_fit((&b0, &z), 1.0, &grid, None).unwrap();
        assert!(series.divergence);
        assert!(series.fitted_slope > 0.2 && series.fitted_slope < 0.45, "{}", series.fitted_slope);
        assert_eq!(series.rows().count(), grid.len());
    }
}
